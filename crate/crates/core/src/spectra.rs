//! Closed-form (rotating-wave, good-cavity) noise spectra for the drive
//! schemes, and the conversion chain from cavity output to measured
//! voltage noise.
//!
//! Spectral densities are two-sided in the offset frequency `omega` (rad/s)
//! and normalised so that `integral S(omega) d omega / 2 pi` is the variance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{derive_xzp, gamma_opt, hz, to_hz, DriveScheme, EffectiveMechanics, Scheme, SystemParams, HBAR, KB};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    MechanicalX,
    QuadratureX1,
    QuadratureX2,
    QuadraturePhi,
    CavityOutputQuanta,
    /// Intracavity fluctuation spectrum, quanta per (rad/s).
    CavityField,
    VoltageNoise,
}

impl SpectrumKind {
    pub fn units(self) -> &'static str {
        match self {
            SpectrumKind::MechanicalX
            | SpectrumKind::QuadratureX1
            | SpectrumKind::QuadratureX2
            | SpectrumKind::QuadraturePhi => "m^2/(rad/s)",
            SpectrumKind::CavityOutputQuanta => "quanta",
            SpectrumKind::CavityField => "1/(rad/s)",
            SpectrumKind::VoltageNoise => "aW/Hz",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpectrumKind::MechanicalX => "MechanicalX",
            SpectrumKind::QuadratureX1 => "QuadratureX1",
            SpectrumKind::QuadratureX2 => "QuadratureX2",
            SpectrumKind::QuadraturePhi => "QuadraturePhi",
            SpectrumKind::CavityOutputQuanta => "CavityOutputQuanta",
            SpectrumKind::CavityField => "CavityField",
            SpectrumKind::VoltageNoise => "VoltageNoise",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        use SpectrumKind::*;
        [
            MechanicalX,
            QuadratureX1,
            QuadratureX2,
            QuadraturePhi,
            CavityOutputQuanta,
            CavityField,
            VoltageNoise,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reference {
    CavityResonance,
    MechanicalResonance,
    SidebandCenter,
}

impl Reference {
    pub fn name(self) -> &'static str {
        match self {
            Reference::CavityResonance => "CavityResonance",
            Reference::MechanicalResonance => "MechanicalResonance",
            Reference::SidebandCenter => "SidebandCenter",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Reference::CavityResonance,
            Reference::MechanicalResonance,
            Reference::SidebandCenter,
        ]
        .into_iter()
        .find(|r| r.name() == s)
    }
}

/// Which engine produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    ClosedForm,
    Floquet,
    Stochastic,
    External,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::ClosedForm => "closed-form",
            Backend::Floquet => "floquet",
            Backend::Stochastic => "stochastic",
            Backend::External => "external",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Backend::ClosedForm,
            Backend::Floquet,
            Backend::Stochastic,
            Backend::External,
        ]
        .into_iter()
        .find(|b| b.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Offsets from `reference`, rad/s, strictly increasing.
    pub freq_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
    pub reference: Reference,
    pub source: Backend,
}

impl Spectrum {
    pub fn new(
        freq_grid: Vec<f64>,
        values: Vec<f64>,
        kind: SpectrumKind,
        reference: Reference,
        source: Backend,
    ) -> Result<Self> {
        if freq_grid.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid points but {} values",
                freq_grid.len(),
                values.len()
            )));
        }
        if freq_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::GridMismatch("grid must be strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(
                "values",
                format!("auto-spectrum value {v} is negative or not finite"),
            ));
        }
        Ok(Spectrum {
            freq_grid,
            values,
            kind,
            reference,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn units(&self) -> &'static str {
        self.kind.units()
    }

    /// Trapezoidal `integral S d omega / 2 pi` over the grid.
    pub fn integrate(&self) -> f64 {
        trapezoid(&self.freq_grid, &self.values) / (2.0 * PI)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.values.iter().map(|&v| f(v)).collect()
    }
}

impl Spectrum {
    /// CSV with `#` comment lines: caller comments first, then the metadata
    /// line, then `offset_hz,psd_value,units` rows.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            s.push_str(&format!("# {c}\n"));
        }
        s.push_str(&format!(
            "# kind={},reference={},source={},units={}\n",
            self.kind.name(),
            self.reference.name(),
            self.source.name(),
            self.units()
        ));
        s.push_str("offset_hz,psd_value,units\n");
        for (w, v) in self.freq_grid.iter().zip(&self.values) {
            s.push_str(&format!("{:.12e},{:.12e},{}\n", to_hz(*w), v, self.units()));
        }
        s
    }

    /// Parse the format written by [`Spectrum::to_csv`]. Spectra without a
    /// metadata line are rejected.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta: Option<(SpectrumKind, Reference, Backend)> = None;
        let mut grid = Vec::new();
        let mut values = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if c.trim_start().starts_with("kind=") {
                    meta = Some(parse_meta(c.trim())?);
                }
                continue;
            }
            if !header_seen {
                if line != "offset_hz,psd_value,units" {
                    return Err(Error::Config(format!(
                        "line {}: unexpected header `{line}`",
                        lineno + 1
                    )));
                }
                header_seen = true;
                continue;
            }
            let mut cols = line.split(',');
            let mut num = |name: &str| -> Result<f64> {
                cols.next()
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("line {}: bad {name}", lineno + 1)))
            };
            grid.push(hz(num("offset_hz")?));
            values.push(num("psd_value")?);
        }
        let (kind, reference, source) =
            meta.ok_or_else(|| Error::Config("missing `# kind=...` metadata line".into()))?;
        Spectrum::new(grid, values, kind, reference, source)
    }
}

fn parse_meta(c: &str) -> Result<(SpectrumKind, Reference, Backend)> {
    let mut kind = None;
    let mut reference = None;
    let mut source = Some(Backend::External);
    for kv in c.split(',') {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad metadata entry `{kv}`")))?;
        match k.trim() {
            "kind" => kind = SpectrumKind::parse(v.trim()),
            "reference" => reference = Reference::parse(v.trim()),
            "source" => source = Backend::parse(v.trim()),
            _ => {}
        }
    }
    match (kind, reference, source) {
        (Some(k), Some(r), Some(s)) => Ok((k, r, s)),
        _ => Err(Error::Config(format!("unrecognised spectrum metadata `{c}`"))),
    }
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Uniform grid of `n` points spanning [-half_width, half_width].
pub fn uniform_grid(half_width: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64)
        .collect()
}

/// +/- 25 linewidths, 2001 points.
pub fn default_grid(gamma_m: f64) -> Vec<f64> {
    uniform_grid(25.0 * gamma_m, 2001)
}

/// Unit-area Lorentzian gamma / (omega^2 + gamma^2 / 4).
pub fn lorentzian(omega: f64, gamma: f64) -> f64 {
    gamma / (omega * omega + 0.25 * gamma * gamma)
}

/// Proportionality constants for the probe-induced corrections, which are
/// only known up to scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelKnobs {
    pub n_extra_scale: f64,
    pub gamma_extra_scale: f64,
}

impl Default for ModelKnobs {
    fn default() -> Self {
        ModelKnobs {
            n_extra_scale: 1.0,
            gamma_extra_scale: 1.0,
        }
    }
}

/// Occupancy decomposition of the measured motion.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BackactionBudget {
    pub n_m_t: f64,
    /// Two-tone (non-BAE) back-action occupancy.
    pub n_ba: f64,
    pub n_ba_bae: f64,
    pub n_bad: f64,
    pub n_extra: f64,
    pub n_c: f64,
}

impl BackactionBudget {
    /// Effective occupancy of the DTT measurement, n_m_T + n_ba.
    pub fn n_bar(&self) -> f64 {
        self.n_m_t + self.n_ba
    }

    pub fn n_x1(&self) -> f64 {
        self.n_m_t + self.n_bad + self.n_extra
    }

    pub fn n_x2(&self) -> f64 {
        self.n_m_t + self.n_ba_bae
    }
}

/// Finite-resolution leakage factor (1/32)(kappa/omega_m)^2.
pub fn bad_cavity_factor(params: &SystemParams) -> f64 {
    (params.kappa() / params.omega_m()).powi(2) / 32.0
}

fn dtt_parts(scheme: &DriveScheme) -> Result<(f64, f64)> {
    match scheme.variant {
        Scheme::DetunedTwoTone {
            delta,
            n_p_per_tone,
            blue_to_red_ratio,
        } => {
            if (blue_to_red_ratio - 1.0).abs() > 1e-9 {
                return Err(Error::Unbalanced {
                    ratio: blue_to_red_ratio,
                });
            }
            Ok((delta, n_p_per_tone))
        }
        _ => Err(Error::UnsupportedScheme("expected a detuned two-tone scheme".into())),
    }
}

pub fn dtt_budget(params: &SystemParams, eff: &EffectiveMechanics, scheme: &DriveScheme) -> Result<BackactionBudget> {
    let (_, n_p) = dtt_parts(scheme)?;
    let n_c = params.n_c();
    let n_ba = gamma_opt(params, n_p)? / eff.gamma_m * (2.0 * n_c + 1.0);
    Ok(BackactionBudget {
        n_m_t: eff.n_m_t,
        n_ba,
        n_c,
        ..Default::default()
    })
}

/// Displacement spectrum under a balanced detuned two-tone drive.
pub fn s_x_dtt(
    grid: &[f64],
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
) -> Result<Spectrum> {
    let b = dtt_budget(params, eff, scheme)?;
    let x2 = derive_xzp(params).powi(2);
    let w = 1.0 + 2.0 * b.n_bar();
    let values = grid.iter().map(|&o| x2 * lorentzian(o, eff.gamma_m) * w).collect();
    Spectrum::new(
        grid.to_vec(),
        values,
        SpectrumKind::MechanicalX,
        Reference::MechanicalResonance,
        Backend::ClosedForm,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Red,
    Blue,
}

/// Lorentzian weights of the up-converted (red) and down-converted (blue)
/// sidebands.
pub fn sideband_weights(n_bar: f64, n_c: f64, n_c_r: f64) -> (f64, f64) {
    (n_bar + n_c_r - 2.0 * n_c, n_bar + 1.0 - n_c_r + 2.0 * n_c)
}

/// Output floor near the cavity resonance, in quanta.
pub fn output_floor(params: &SystemParams) -> f64 {
    let n_c = params.n_c();
    let n_cr = params.n_c_bath().r;
    0.5 + n_cr + 4.0 * params.kappa_r() / params.kappa() * (n_c - n_cr)
}

/// Right-port output spectrum around one motional sideband; the grid is the
/// offset from the sideband centre.
pub fn sideband_out(
    grid: &[f64],
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    side: Side,
) -> Result<Spectrum> {
    let (_, n_p) = dtt_parts(scheme)?;
    let b = dtt_budget(params, eff, scheme)?;
    let (red, blue) = sideband_weights(b.n_bar(), b.n_c, params.n_c_bath().r);
    let weight = match side {
        Side::Red => red,
        Side::Blue => blue,
    };
    let scale = params.kappa_r() / params.kappa() * gamma_opt(params, n_p)?;
    let floor = output_floor(params);
    let values = grid
        .iter()
        .map(|&o| floor + scale * lorentzian(o, eff.gamma_m) * weight)
        .collect();
    Spectrum::new(
        grid.to_vec(),
        values,
        SpectrumKind::CavityOutputQuanta,
        Reference::SidebandCenter,
        Backend::ClosedForm,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpectra {
    pub x1: Spectrum,
    pub x2: Spectrum,
    pub xphi: Spectrum,
    pub budget: BackactionBudget,
    pub phi: f64,
    pub gamma_extra: f64,
}

/// BAE pump parameters: (n_p_pump total, n_p_probe total, probe offset, phi).
fn bae_parts(scheme: &DriveScheme) -> Result<(f64, f64, f64, f64)> {
    match scheme.variant {
        Scheme::Bae { n_p_total } => Ok((n_p_total, 0.0, 0.0, 0.0)),
        Scheme::BaeWithProbe {
            n_p_pump,
            n_p_probe,
            delta,
            phi,
        } => {
            if n_p_probe >= n_p_pump {
                return Err(Error::ProbeTooStrong {
                    probe: n_p_probe,
                    pump: n_p_pump,
                });
            }
            Ok((n_p_pump, n_p_probe, delta, phi))
        }
        _ => Err(Error::UnsupportedScheme("expected a BAE scheme".into())),
    }
}

pub fn bae_budget(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    knobs: &ModelKnobs,
) -> Result<BackactionBudget> {
    params.require_sideband_resolved()?;
    let (n_pump, n_probe, _, phi) = bae_parts(scheme)?;
    let n_c = params.n_c();
    // (2 g0^2 / (kappa Gamma_m)) |a_pump|^2 (2 n_c + 1), |a_pump|^2 = 2 n_pump
    let n_ba_bae = 2.0 * params.g0().powi(2) / (params.kappa() * eff.gamma_m) * (2.0 * n_pump) * (2.0 * n_c + 1.0);
    let n_bad = bad_cavity_factor(params) * n_ba_bae;
    let ratio = if n_pump > 0.0 { n_probe / n_pump } else { 0.0 };
    let n_extra = knobs.n_extra_scale * n_ba_bae * phi.sin().powi(2) * ratio;
    Ok(BackactionBudget {
        n_m_t: eff.n_m_t,
        n_ba: 0.0,
        n_ba_bae,
        n_bad,
        n_extra,
        n_c,
    })
}

/// Probe-induced non-QND damping, Gamma_m Gamma_opt^2 / delta^2 (a_probe/a_pump)^2
/// times the configured scale.
pub fn gamma_extra(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    knobs: &ModelKnobs,
) -> Result<f64> {
    let (n_pump, n_probe, delta, _) = bae_parts(scheme)?;
    if n_probe == 0.0 {
        return Ok(0.0);
    }
    let g_opt = gamma_opt(params, n_pump)?;
    Ok(knobs.gamma_extra_scale * eff.gamma_m * (g_opt / delta).powi(2) * (n_probe / n_pump))
}

pub fn s_quadratures_bae(
    grid: &[f64],
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    knobs: &ModelKnobs,
) -> Result<QuadratureSpectra> {
    let budget = bae_budget(params, eff, scheme, knobs)?;
    let (_, _, _, phi) = bae_parts(scheme)?;
    let x2 = derive_xzp(params).powi(2);
    let w1 = 1.0 + 2.0 * budget.n_x1();
    let w2 = 1.0 + 2.0 * budget.n_x2();
    let (c2, s2) = (phi.cos().powi(2), phi.sin().powi(2));
    let mut v1 = Vec::with_capacity(grid.len());
    let mut v2 = Vec::with_capacity(grid.len());
    let mut vp = Vec::with_capacity(grid.len());
    for &o in grid {
        let l = x2 * lorentzian(o, eff.gamma_m);
        v1.push(l * w1);
        v2.push(l * w2);
        vp.push(c2 * l * w1 + s2 * l * w2);
    }
    let mk = |v, kind| {
        Spectrum::new(
            grid.to_vec(),
            v,
            kind,
            Reference::MechanicalResonance,
            Backend::ClosedForm,
        )
    };
    Ok(QuadratureSpectra {
        x1: mk(v1, SpectrumKind::QuadratureX1)?,
        x2: mk(v2, SpectrumKind::QuadratureX2)?,
        xphi: mk(vp, SpectrumKind::QuadraturePhi)?,
        budget,
        phi,
        gamma_extra: gamma_extra(params, eff, scheme, knobs)?,
    })
}

/// Symmetrised right-port output noise of the undriven cavity at offset
/// `omega` from its resonance.
pub fn cavity_output_noise_at(params: &SystemParams, omega: f64) -> f64 {
    let k = params.kappa();
    let n_cr = params.n_c_bath().r;
    params.kappa_r() * k / (0.25 * k * k + omega * omega) * (params.n_c() - n_cr) + n_cr + 0.5
}

pub fn cavity_output_noise(grid: &[f64], params: &SystemParams) -> Result<Spectrum> {
    let values = grid.iter().map(|&o| cavity_output_noise_at(params, o)).collect();
    Spectrum::new(
        grid.to_vec(),
        values,
        SpectrumKind::CavityOutputQuanta,
        Reference::CavityResonance,
        Backend::ClosedForm,
    )
}

/// Affine map from output quanta to analyser voltage noise:
/// `S_V = (1/alpha) (kappa / 4 kappa_R) S_R + S_V^HEMT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutChain {
    /// Quanta per (aW/Hz).
    pub alpha: f64,
    /// Amplifier floor, aW/Hz.
    pub s_v_hemt: f64,
}

impl ReadoutChain {
    pub fn new(alpha: f64, s_v_hemt: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid("alpha", format!("must be > 0, got {alpha}")));
        }
        if !(s_v_hemt.is_finite() && s_v_hemt >= 0.0) {
            return Err(invalid("s_v_hemt", format!("must be >= 0, got {s_v_hemt}")));
        }
        Ok(ReadoutChain { alpha, s_v_hemt })
    }

    /// Chain whose amplifier floor corresponds to `n_add` added quanta at
    /// the device output.
    pub fn with_added_quanta(params: &SystemParams, alpha: f64, n_add: f64) -> Result<Self> {
        Self::new(alpha, params.kappa() / (4.0 * params.kappa_r()) * n_add / alpha)
    }

    pub fn convert(&self, params: &SystemParams, s_r: f64) -> f64 {
        params.kappa() / (4.0 * params.kappa_r()) * s_r / self.alpha + self.s_v_hemt
    }

    /// On-resonance noise with the device connected.
    pub fn eta(&self, params: &SystemParams) -> f64 {
        self.convert(params, cavity_output_noise_at(params, 0.0))
    }

    /// Calibration-mode floor (device replaced by a through line).
    pub fn eta0(&self, params: &SystemParams) -> f64 {
        params.kappa() / (8.0 * params.kappa_r()) / self.alpha + self.s_v_hemt
    }

    pub fn delta_eta(&self, params: &SystemParams) -> f64 {
        self.eta(params) - self.eta0(params)
    }

    /// Total cavity occupancy implied by a measured excess `delta_eta`.
    pub fn n_c_from_delta_eta(&self, params: &SystemParams, delta_eta: f64) -> f64 {
        let kr = params.kappa_r();
        self.alpha * delta_eta + (4.0 * kr - params.kappa()) / (4.0 * kr) * params.n_c_bath().r
    }

    /// Back-action in X2 normalised by its quantum part, `2 n_c + 1`.
    pub fn normalized_backaction(&self, params: &SystemParams, delta_eta: f64) -> f64 {
        2.0 * self.n_c_from_delta_eta(params, delta_eta) + 1.0
    }
}

pub fn voltage_noise(spectrum: &Spectrum, chain: &ReadoutChain, params: &SystemParams) -> Result<Spectrum> {
    if spectrum.kind != SpectrumKind::CavityOutputQuanta {
        return Err(Error::NotAllowed(format!(
            "voltage conversion expects CavityOutputQuanta, got {}",
            spectrum.kind.name()
        )));
    }
    let values = spectrum.map_values(|v| chain.convert(params, v));
    Spectrum::new(
        spectrum.freq_grid.clone(),
        values,
        SpectrumKind::VoltageNoise,
        spectrum.reference,
        spectrum.source,
    )
}

/// Quanta added by a phase-insensitive amplifier of noise temperature
/// `t_noise`, referred to the device output.
pub fn amplifier_added_quanta(params: &SystemParams, t_noise: f64) -> f64 {
    KB * t_noise / (HBAR * params.omega_c())
}

/// Variance of a Lorentzian of peak `s_x0` and FWHM `gamma_m`.
pub fn imprecision(s_x0: f64, gamma_m: f64) -> f64 {
    0.25 * s_x0 * gamma_m
}

/// Imprecision at the quantum limit, x_zp^2 Gamma_m / (8 Gamma_opt), with
/// Gamma_opt evaluated at the total BAE photon number.
pub fn quantum_limit_imprecision(params: &SystemParams, gamma_m: f64, n_p_total: f64) -> Result<f64> {
    let g = gamma_opt(params, n_p_total)?;
    Ok(derive_xzp(params).powi(2) * gamma_m / (8.0 * g))
}

/// Imprecision of a BAE measurement whose output floor is `floor_quanta`
/// (vacuum, cavity noise and amplifier noise referred to the device output).
pub fn bae_imprecision(params: &SystemParams, gamma_m: f64, n_p_total: f64, floor_quanta: f64) -> Result<f64> {
    let g = gamma_opt(params, n_p_total)?;
    if g == 0.0 {
        return Ok(f64::INFINITY);
    }
    let eta_r = params.kappa_r() / params.kappa();
    Ok(derive_xzp(params).powi(2) * floor_quanta * gamma_m / (2.0 * eta_r * g))
}

/// Imprecision of the averaged two-tone sideband.
pub fn dtt_imprecision(params: &SystemParams, gamma_m: f64, n_p_per_tone: f64, floor_quanta: f64) -> Result<f64> {
    let g = gamma_opt(params, n_p_per_tone)?;
    if g == 0.0 {
        return Ok(f64::INFINITY);
    }
    let eta_r = params.kappa_r() / params.kappa();
    Ok(derive_xzp(params).powi(2) * floor_quanta * gamma_m / (2.0 * eta_r * g))
}

/// Detector noise product sqrt(S_X1 S_F) in units of hbar.
///
/// Both densities are two-sided lab-frame quantities, so an ideal
/// detector sits at 1/2. The imprecision density is the white floor whose
/// Lorentzian-weighted share of the two peaks at +-omega_m equals
/// `imprecision_var`; the force density is the white force that produces
/// `backaction_var` in an oscillator of linewidth `gamma_m`. The
/// derivation is in `docs/noise_product.md`.
pub fn noise_product(params: &SystemParams, gamma_m: f64, imprecision_var: f64, backaction_var: f64) -> f64 {
    let s_x = 2.0 * imprecision_var / gamma_m;
    let s_f = force_psd(params, gamma_m, backaction_var);
    (s_x * s_f).sqrt() / HBAR
}

/// White force density (two-sided, N^2/(rad/s)) giving quadrature variance
/// `backaction_var` at linewidth `gamma_m`.
pub fn force_psd(params: &SystemParams, gamma_m: f64, backaction_var: f64) -> f64 {
    2.0 * (params.mass() * params.omega_m()).powi(2) * gamma_m * backaction_var
}
