//! Semiclassical Langevin integration of the linearised equations and
//! Welch spectral estimation of the resulting records.
//!
//! The state is the real 4-vector (Re d, Im d, Re b, Im b) in the same
//! frames as the lattice solver: cavity at its resonance, mechanics at
//! `omega_r`. Couplings that are static in this frame are integrated exactly
//! together with damping and noise; the remaining oscillating couplings are
//! added with an exponential Euler step.

use nalgebra::{Matrix4, SMatrix, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::floquet::frame_frequency;
use crate::model::{derive_xzp, DriveScheme, EffectiveMechanics, SystemParams};
use crate::spectra::{Backend, Reference, Spectrum, SpectrumKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Integration step; `None` picks 1/(50 omega_max).
    pub dt: Option<f64>,
    /// Recorded time per trajectory, s.
    pub duration: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Discarded settling time; `None` uses eight times the slowest decay time.
    pub burn_in: Option<f64>,
    /// Drop couplings oscillating at about 2 omega_r.
    pub rwa: bool,
    /// Record every `decimation`-th step.
    pub decimation: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            dt: None,
            duration: 2.0,
            n_traj: 64,
            seed: 0x5eed,
            burn_in: None,
            rwa: true,
            decimation: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub dt: f64,
    /// Spacing of the recorded samples.
    pub sample_dt: f64,
    pub duration: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub x_zp: f64,
    /// Mechanical resonance offset in the simulation frame.
    pub mech_offset: f64,
    pub d: Vec<Vec<Complex64>>,
    pub b: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, Copy)]
struct Coupling {
    /// 0 = d equation, 1 = b equation.
    target: usize,
    /// 0 = d, 1 = b.
    source: usize,
    conj_source: bool,
    coeff: Complex64,
    theta: f64,
}

fn couplings(params: &SystemParams, scheme: &DriveScheme, omega_r: f64) -> Result<Vec<Coupling>> {
    let g0 = params.g0();
    let i = Complex64::i();
    let mut out = Vec::new();
    for t in scheme.tones(params)? {
        if t.photon_number == 0.0 {
            continue;
        }
        let a = t.amplitude() * g0;
        let nu = t.detuning_from_cavity;
        let (tp, tm) = (nu + omega_r, nu - omega_r);
        let mut push = |target, source, conj_source, coeff, theta| {
            out.push(Coupling {
                target,
                source,
                conj_source,
                coeff,
                theta,
            })
        };
        push(0, 1, false, -i * a, tp);
        push(0, 1, true, -i * a, tm);
        push(1, 0, false, -i * a.conj(), -tp);
        push(1, 0, true, -i * a, tm);
    }
    Ok(out)
}

/// Real 4x4 block for `target += c * source` (or `c * conj(source)`).
fn add_real_block(m: &mut Matrix4<f64>, c: &Coupling) {
    let (r, k) = (2 * c.target, 2 * c.source);
    let (cr, ci) = (c.coeff.re, c.coeff.im);
    if c.conj_source {
        m[(r, k)] += cr;
        m[(r, k + 1)] += ci;
        m[(r + 1, k)] += ci;
        m[(r + 1, k + 1)] -= cr;
    } else {
        m[(r, k)] += cr;
        m[(r, k + 1)] -= ci;
        m[(r + 1, k)] += ci;
        m[(r + 1, k + 1)] += cr;
    }
}

/// Discretised dynamics shared by all trajectories.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub dt: f64,
    pub omega_max: f64,
    phi: Matrix4<f64>,
    psi: Matrix4<f64>,
    chol: Matrix4<f64>,
    dynamic: Vec<Coupling>,
    slowest_rate: f64,
}

impl Propagator {
    pub fn new(
        params: &SystemParams,
        eff: &EffectiveMechanics,
        scheme: &DriveScheme,
        dt: Option<f64>,
        rwa: bool,
    ) -> Result<Self> {
        let omega_r = frame_frequency(params, scheme);
        let dm = params.omega_m() - omega_r;
        let k = params.kappa();
        let gm = eff.gamma_m;
        let mut r0 = Matrix4::<f64>::zeros();
        r0[(0, 0)] = -0.5 * k;
        r0[(1, 1)] = -0.5 * k;
        // b' = -(gamma/2 + i dm) b
        r0[(2, 2)] = -0.5 * gm;
        r0[(3, 3)] = -0.5 * gm;
        r0[(2, 3)] = dm;
        r0[(3, 2)] = -dm;

        let tol = 1e-9 * omega_r;
        let mut dynamic = Vec::new();
        for c in couplings(params, scheme, omega_r)? {
            if c.theta.abs() <= tol {
                add_real_block(&mut r0, &c);
            } else if !(rwa && c.theta.abs() > omega_r) {
                dynamic.push(c);
            }
        }

        let eig = r0.complex_eigenvalues();
        let max_re = eig.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
        if max_re >= 0.0 {
            return Err(Error::Unstable(format!(
                "static dynamics has a growing mode (Re lambda = {max_re:.3e} 1/s)"
            )));
        }
        let slowest_rate = -max_re;

        let omega_max = dynamic
            .iter()
            .map(|c| c.theta.abs())
            .fold(dm.abs().max(25.0 * gm), f64::max);
        let dt = dt.unwrap_or(1.0 / (50.0 * omega_max));
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("must be > 0, got {dt}")));
        }
        if dt * omega_max >= 0.1 {
            return Err(Error::StepTooCoarse(dt * omega_max));
        }

        let phi = (r0 * dt).exp();
        // psi = integral_0^dt exp(r0 s) ds from the augmented exponential
        let mut aug = SMatrix::<f64, 8, 8>::zeros();
        aug.fixed_view_mut::<4, 4>(0, 0).copy_from(&(r0 * dt));
        aug.fixed_view_mut::<4, 4>(0, 4).copy_from(&(Matrix4::identity() * dt));
        let psi: Matrix4<f64> = aug.exp().fixed_view::<4, 4>(0, 4).into_owned();

        // Van Loan: noise covariance accumulated over one step
        let b = params.n_c_bath();
        let ports = [
            (params.kappa_l(), b.l),
            (params.kappa_r(), b.r),
            (params.kappa_int(), b.int),
        ];
        let sd: f64 = ports.iter().map(|(kj, n)| kj * (n + 0.5)).sum::<f64>() / 2.0;
        let sb = gm * (eff.n_m_t + 0.5) / 2.0;
        let sigma = Matrix4::from_diagonal(&Vector4::new(sd, sd, sb, sb));
        let mut vl = SMatrix::<f64, 8, 8>::zeros();
        vl.fixed_view_mut::<4, 4>(0, 0).copy_from(&(-r0 * dt));
        vl.fixed_view_mut::<4, 4>(0, 4).copy_from(&(sigma * dt));
        vl.fixed_view_mut::<4, 4>(4, 4).copy_from(&(r0.transpose() * dt));
        let e = vl.exp();
        let f12: Matrix4<f64> = e.fixed_view::<4, 4>(0, 4).into_owned();
        let f22: Matrix4<f64> = e.fixed_view::<4, 4>(4, 4).into_owned();
        let q = f22.transpose() * f12;
        let q = 0.5 * (q + q.transpose());
        let chol = q
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::Unstable("step noise covariance is not positive definite".into()))?;

        Ok(Propagator {
            dt,
            omega_max,
            phi,
            psi,
            chol,
            dynamic,
            slowest_rate,
        })
    }

    pub fn default_burn_in(&self) -> f64 {
        8.0 / self.slowest_rate
    }

    /// Advance `x` from time `t` by one step.
    #[inline]
    fn step(&self, x: &Vector4<f64>, phasors: &[Complex64], rng: &mut ChaCha8Rng) -> Vector4<f64> {
        let z = Vector4::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let mut next = self.phi * x + self.chol * z;
        if !self.dynamic.is_empty() {
            let mut f = [Complex64::new(0.0, 0.0); 2];
            for (c, ph) in self.dynamic.iter().zip(phasors) {
                let s = Complex64::new(x[2 * c.source], x[2 * c.source + 1]);
                let s = if c.conj_source { s.conj() } else { s };
                f[c.target] += c.coeff * ph * s;
            }
            next += self.psi * Vector4::new(f[0].re, f[0].im, f[1].re, f[1].im);
        }
        next
    }
}

/// RNG for trajectory `index`: the master seed with one stream per
/// trajectory.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn run_one(
    prop: &Propagator,
    n_burn: usize,
    n_samples: usize,
    decimation: usize,
    mut rng: ChaCha8Rng,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let mut x = Vector4::zeros();
    let mut d = Vec::with_capacity(n_samples);
    let mut b = Vec::with_capacity(n_samples);
    let rot: Vec<Complex64> = prop
        .dynamic
        .iter()
        .map(|c| Complex64::from_polar(1.0, -c.theta * prop.dt))
        .collect();
    let mut ph: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); prop.dynamic.len()];
    let total = n_burn + n_samples * decimation;
    for k in 0..total {
        x = prop.step(&x, &ph, &mut rng);
        for (p, r) in ph.iter_mut().zip(&rot) {
            *p *= r;
        }
        if k % 4096 == 0 {
            for p in ph.iter_mut() {
                *p /= p.norm();
            }
            if !x.iter().all(|v| v.is_finite()) || x.norm() > 1e150 {
                return Err(Error::Unstable("trajectory diverged".into()));
            }
        }
        if k >= n_burn && (k - n_burn) % decimation == decimation - 1 {
            d.push(Complex64::new(x[0], x[1]));
            b.push(Complex64::new(x[2], x[3]));
        }
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Unstable("trajectory diverged".into()));
    }
    Ok((d, b))
}

pub fn integrate(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    cfg: &EnsembleConfig,
) -> Result<TrajectoryEnsemble> {
    if cfg.n_traj == 0 {
        return Err(invalid("n_traj", "need at least one trajectory"));
    }
    if cfg.decimation == 0 {
        return Err(invalid("decimation", "must be >= 1"));
    }
    if !(cfg.duration.is_finite() && cfg.duration > 0.0) {
        return Err(invalid("duration", "must be > 0"));
    }
    let prop = Propagator::new(params, eff, scheme, cfg.dt, cfg.rwa)?;
    let burn = cfg.burn_in.unwrap_or_else(|| prop.default_burn_in());
    let n_burn = (burn / prop.dt).ceil() as usize;
    let sample_dt = prop.dt * cfg.decimation as f64;
    let n_samples = (cfg.duration / sample_dt).round() as usize;
    if n_samples < 2 {
        return Err(invalid("duration", "shorter than two samples"));
    }
    let runs = (0..cfg.n_traj)
        .into_par_iter()
        .map(|k| {
            run_one(
                &prop,
                n_burn,
                n_samples,
                cfg.decimation,
                trajectory_rng(cfg.seed, k as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let (d, b) = runs.into_iter().unzip();
    Ok(TrajectoryEnsemble {
        dt: prop.dt,
        sample_dt,
        duration: n_samples as f64 * sample_dt,
        n_traj: cfg.n_traj,
        seed: cfg.seed,
        x_zp: derive_xzp(params),
        mech_offset: params.omega_m() - frame_frequency(params, scheme),
        d,
        b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Channel {
    /// Intracavity fluctuation d.
    Cavity,
    /// Displacement sqrt(2) x_zp b around the mechanical resonance.
    Mechanical,
    X1,
    X2,
    XPhi(f64),
}

/// Real quadrature records of trajectory `k`: X1 = 2 x_zp Re b,
/// X2 = 2 x_zp Im b.
pub fn quadrature_series(ens: &TrajectoryEnsemble, k: usize) -> (Vec<f64>, Vec<f64>) {
    let s = 2.0 * ens.x_zp;
    ens.b[k].iter().map(|b| (s * b.re, s * b.im)).unzip()
}

/// X(phi) = 2 x_zp Re(b e^{i phi}) = X1 cos phi - X2 sin phi.
pub fn rotated_series(ens: &TrajectoryEnsemble, k: usize, phi: f64) -> Vec<f64> {
    let r = Complex64::from_polar(2.0 * ens.x_zp, phi);
    ens.b[k].iter().map(|b| (b * r).re).collect()
}

fn channel_series(ens: &TrajectoryEnsemble, k: usize, ch: Channel) -> Vec<Complex64> {
    let re = |v: Vec<f64>| v.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    match ch {
        Channel::Cavity => ens.d[k].clone(),
        Channel::Mechanical => {
            let s = std::f64::consts::SQRT_2 * ens.x_zp;
            ens.b[k].iter().map(|b| b * s).collect()
        }
        Channel::X1 => re(rotated_series(ens, k, 0.0)),
        Channel::X2 => re(ens.b[k].iter().map(|b| 2.0 * ens.x_zp * b.im).collect()),
        Channel::XPhi(phi) => re(rotated_series(ens, k, phi)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub segment_length: usize,
    pub overlap: f64,
    pub window: Window,
}

impl WelchConfig {
    pub fn new(segment_length: usize, overlap: f64, window: Window) -> Result<Self> {
        if !(0.0..1.0).contains(&overlap) {
            return Err(invalid("overlap", format!("must be in [0, 1), got {overlap}")));
        }
        if segment_length < 2 {
            return Err(invalid("segment_length", "must be >= 2"));
        }
        Ok(WelchConfig {
            segment_length,
            overlap,
            window,
        })
    }
}

fn window_coeffs(w: Window, n: usize) -> Vec<f64> {
    match w {
        Window::Rectangular => vec![1.0; n],
        Window::Hann => (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect(),
    }
}

/// Welch estimate of the two-sided density of a uniformly sampled complex
/// record, on the centred FFT grid (rad/s). The transform sign matches the
/// `e^{+i omega t}` convention of the rest of the crate.
///
/// Returns `(grid, psd, windowed_power)`; `integral psd d omega / 2 pi`
/// equals `windowed_power` exactly.
pub fn welch(x: &[Complex64], dt: f64, cfg: &WelchConfig) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = cfg.segment_length;
    if n > x.len() {
        return Err(invalid(
            "segment_length",
            format!("segment of {n} samples exceeds record of {}", x.len()),
        ));
    }
    let hop = ((n as f64) * (1.0 - cfg.overlap)).round().max(1.0) as usize;
    let w = window_coeffs(cfg.window, n);
    let wss: f64 = w.iter().map(|v| v * v).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut acc = vec![0.0; n];
    let mut power = 0.0;
    let mut n_seg = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut start = 0;
    while start + n <= x.len() {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = x[start + k] * w[k];
        }
        power += buf.iter().map(|v| v.norm_sqr()).sum::<f64>() / wss;
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        n_seg += 1;
        start += hop;
    }
    let scale = dt / (wss * n_seg as f64);
    let dw = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let half = n / 2;
    let mut grid = Vec::with_capacity(n);
    let mut psd = Vec::with_capacity(n);
    for i in 0..n {
        let k = (i + n - half) % n;
        let f = if k >= n - half { k as i64 - n as i64 } else { k as i64 };
        grid.push(f as f64 * dw);
        psd.push(acc[k] * scale);
    }
    let power = power / n_seg as f64;
    let integral: f64 = psd.iter().sum::<f64>() * dw / (2.0 * std::f64::consts::PI);
    if (integral - power).abs() > 1e-2 * power.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(format!(
            "Parseval check failed: integral {integral:.6e} vs power {power:.6e}"
        )));
    }
    Ok((grid, psd, power))
}

#[derive(Debug, Clone)]
pub struct PsdEstimate {
    pub spectrum: Spectrum,
    /// Standard error of the ensemble mean per bin.
    pub stderr: Vec<f64>,
    /// Per-trajectory integrated power.
    pub per_traj_power: Vec<f64>,
    pub per_traj_psd: Vec<Vec<f64>>,
}

impl PsdEstimate {
    pub fn mean_power(&self) -> f64 {
        self.per_traj_power.iter().sum::<f64>() / self.per_traj_power.len() as f64
    }

    /// Bootstrap standard error of the ensemble-mean power, resampling
    /// whole trajectories.
    pub fn power_stderr_bootstrap(&self, n_boot: usize, seed: u64) -> f64 {
        let n = self.per_traj_power.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let means: Vec<f64> = (0..n_boot)
            .map(|_| (0..n).map(|_| self.per_traj_power[rng.random_range(0..n)]).sum::<f64>() / n as f64)
            .collect();
        let m = means.iter().sum::<f64>() / n_boot as f64;
        (means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n_boot as f64 - 1.0)).sqrt()
    }
}

/// Ensemble-averaged PSD of a channel. Mechanical channels are referenced
/// to the mechanical resonance, the cavity channel to the cavity.
pub fn psd(ens: &TrajectoryEnsemble, channel: Channel, cfg: &WelchConfig) -> Result<PsdEstimate> {
    let mut per_traj_psd = Vec::with_capacity(ens.n_traj);
    let mut per_traj_power = Vec::with_capacity(ens.n_traj);
    let mut grid = Vec::new();
    for k in 0..ens.n_traj {
        let x = channel_series(ens, k, channel);
        let (g, p, pow) = welch(&x, ens.sample_dt, cfg)?;
        grid = g;
        per_traj_psd.push(p);
        per_traj_power.push(pow);
    }
    let n = per_traj_psd.len() as f64;
    let nb = grid.len();
    let mut mean = vec![0.0; nb];
    for p in &per_traj_psd {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / n;
        }
    }
    let stderr = (0..nb)
        .map(|i| {
            if per_traj_psd.len() < 2 {
                return f64::NAN;
            }
            let var = per_traj_psd.iter().map(|p| (p[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        })
        .collect();
    let (kind, reference, shift) = match channel {
        Channel::Cavity => (SpectrumKind::CavityField, Reference::CavityResonance, 0.0),
        Channel::Mechanical => (
            SpectrumKind::MechanicalX,
            Reference::MechanicalResonance,
            ens.mech_offset,
        ),
        Channel::X1 => (SpectrumKind::QuadratureX1, Reference::MechanicalResonance, 0.0),
        Channel::X2 => (SpectrumKind::QuadratureX2, Reference::MechanicalResonance, 0.0),
        Channel::XPhi(_) => (SpectrumKind::QuadraturePhi, Reference::MechanicalResonance, 0.0),
    };
    let grid = grid.into_iter().map(|w| w - shift).collect();
    Ok(PsdEstimate {
        spectrum: Spectrum::new(grid, mean, kind, reference, Backend::Stochastic)?,
        stderr,
        per_traj_power,
        per_traj_psd,
    })
}

/// Per-trajectory sample variances of X1 and X2.
pub fn quadrature_variances(ens: &TrajectoryEnsemble) -> Vec<(f64, f64)> {
    (0..ens.n_traj)
        .map(|k| {
            let (x1, x2) = quadrature_series(ens, k);
            (mean_square(&x1), mean_square(&x2))
        })
        .collect()
}

pub(crate) fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Mean and standard error of the mean.
pub fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, f64::NAN);
    }
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// CSV of per-trajectory quadrature variances.
pub fn ensemble_summary_csv(ens: &TrajectoryEnsemble) -> String {
    let mut s = String::from("trajectory,var_x1,var_x2,mean_abs_b2\n");
    for (k, (v1, v2)) in quadrature_variances(ens).into_iter().enumerate() {
        let nb = ens.b[k].iter().map(|b| b.norm_sqr()).sum::<f64>() / ens.b[k].len() as f64;
        s.push_str(&format!("{k},{v1:.9e},{v2:.9e},{nb:.9e}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hz;

    /// Small, fast system in scaled units.
    fn toy() -> (SystemParams, EffectiveMechanics) {
        let p = SystemParams::device_default()
            .modified(|d| {
                d.omega_m = 2.0 * std::f64::consts::PI;
                d.kappa_l = 0.0;
                d.kappa_int = 0.0;
                d.kappa_r = 0.6;
                d.g0 = 1e-3;
                d.n_c_bath = Default::default();
            })
            .unwrap();
        let eff = EffectiveMechanics {
            gamma_m: 0.05,
            n_m_t: 3.0,
        };
        (p, eff)
    }

    #[test]
    fn equipartition_without_tones() {
        let (p, eff) = toy();
        let cfg = EnsembleConfig {
            dt: Some(0.05),
            duration: 4000.0,
            n_traj: 16,
            seed: 7,
            decimation: 4,
            ..Default::default()
        };
        let ens = integrate(&p, &eff, &DriveScheme::bae(0.0), &cfg).unwrap();
        let per: Vec<f64> = ens
            .b
            .iter()
            .map(|b| b.iter().map(|v| v.norm_sqr()).sum::<f64>() / b.len() as f64)
            .collect();
        let (m, se) = mean_stderr(&per);
        assert!((m - 3.5).abs() < 3.0 * se, "{m} +/- {se}");
    }

    #[test]
    fn seed_determinism() {
        let (p, eff) = toy();
        let cfg = EnsembleConfig {
            dt: Some(0.05),
            duration: 20.0,
            n_traj: 3,
            seed: 99,
            ..Default::default()
        };
        let s = DriveScheme::bae(1e5);
        let a = integrate(&p, &eff, &s, &cfg).unwrap();
        let b = integrate(&p, &eff, &s, &cfg).unwrap();
        assert_eq!(a.b, b.b);
        assert_eq!(a.d, b.d);
        let c = integrate(&p, &eff, &s, &EnsembleConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a.b, c.b);
    }

    #[test]
    fn coarse_step_rejected() {
        let (p, eff) = toy();
        let r = Propagator::new(&p, &eff, &DriveScheme::bae(1e5), Some(0.1), false);
        assert!(matches!(r, Err(Error::StepTooCoarse(_))));
    }

    #[test]
    fn unstable_blue_rejected() {
        let (p, eff) = toy();
        let s = DriveScheme::new(crate::model::Scheme::DetunedTwoTone {
            delta: 0.5,
            n_p_per_tone: 1e3,
            blue_to_red_ratio: 1e3,
        });
        assert!(matches!(
            Propagator::new(&p, &eff, &s, None, true),
            Err(Error::Unstable(_))
        ));
    }

    #[test]
    fn real_b_has_zero_x2() {
        let ens = TrajectoryEnsemble {
            dt: 1.0,
            sample_dt: 1.0,
            duration: 3.0,
            n_traj: 1,
            seed: 0,
            x_zp: 1.0,
            mech_offset: 0.0,
            d: vec![vec![Complex64::new(0.0, 0.0); 3]],
            b: vec![vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(-2.0, 0.0),
                Complex64::new(0.5, 0.0),
            ]],
        };
        let (x1, x2) = quadrature_series(&ens, 0);
        assert!(x2.iter().all(|v| *v == 0.0));
        assert_eq!(x1, vec![2.0, -4.0, 1.0]);
    }

    #[test]
    fn white_noise_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dt = 1e-3;
        let x: Vec<Complex64> = (0..1 << 16)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let cfg = WelchConfig::new(256, 0.5, Window::Hann).unwrap();
        let (_, psd, pow) = welch(&x, dt, &cfg).unwrap();
        // variance 2 spread over bandwidth 2 pi / dt: level 2 dt
        let m = psd.iter().sum::<f64>() / psd.len() as f64;
        assert!((m - 2.0 * dt).abs() < 0.02 * 2.0 * dt);
        assert!((pow - 2.0).abs() < 0.05);
        let rect = WelchConfig::new(256, 0.0, Window::Rectangular).unwrap();
        let (_, _, pw) = welch(&x, dt, &rect).unwrap();
        let var = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
        assert!((pw - var).abs() < 1e-9 * var);
    }

    #[test]
    fn welch_sign_convention() {
        // e^{-i w0 t} peaks at +w0
        let dt = 0.01;
        let w0 = 2.0 * std::f64::consts::PI * 5.0;
        let x: Vec<Complex64> = (0..4096)
            .map(|k| Complex64::from_polar(1.0, -w0 * k as f64 * dt))
            .collect();
        let (g, p, _) = welch(&x, dt, &WelchConfig::new(1024, 0.0, Window::Hann).unwrap()).unwrap();
        let imax = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((g[imax] - w0).abs() < 2.0 * std::f64::consts::PI / (1024.0 * dt));
    }

    #[test]
    fn segment_longer_than_record() {
        let x = vec![Complex64::new(1.0, 0.0); 10];
        assert!(welch(&x, 1.0, &WelchConfig::new(16, 0.0, Window::Hann).unwrap()).is_err());
        assert!(WelchConfig::new(16, 1.0, Window::Hann).is_err());
    }

    #[test]
    fn default_dtt_step_and_frame() {
        let p = SystemParams::device_default();
        let eff = EffectiveMechanics {
            gamma_m: hz(100.0),
            n_m_t: 15.0,
        };
        let prop = Propagator::new(&p, &eff, &DriveScheme::dtt(hz(5e3), 2.3e6), None, true).unwrap();
        assert!((prop.omega_max - hz(5e3)).abs() < 1e-6);
        assert!(prop.dynamic.is_empty());
    }
}
