//! Exact linear response of the multi-tone system by frequency-domain
//! inversion on a truncated sideband lattice.
//!
//! The cavity fluctuation `d` is taken in the frame of the cavity resonance
//! and the mechanical mode `b` in a frame rotating at `omega_r` (the pump
//! half-splitting). Each tone at detuning `nu = s omega_r + o` (s = +/-1)
//! generates couplings whose time dependence is a multiple of `2 omega_r`
//! plus the offsets `o`; every such combination is a lattice coordinate.
//! A response at probe frequency `omega` couples the unknowns
//! `[d, d^dag, b, b^dag](omega + theta_p)` over all lattice points `p`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{derive_xzp, DriveScheme, EffectiveMechanics, Scheme, SystemParams, Tone};
use crate::spectra::{Backend, Reference, Spectrum, SpectrumKind};

const D: usize = 0;
const DD: usize = 1;
const B: usize = 2;
const BD: usize = 3;

pub const DEFAULT_TRUNCATION: usize = 8;

/// Relative change allowed when the truncation grows by two.
pub const CONVERGENCE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetOptions {
    pub truncation: usize,
    /// Include the cooling tone in the lattice instead of folding it into
    /// the effective mechanics. The caller then passes bare mechanics.
    pub exact_cooling: bool,
    /// Refuse truncations below twice the number of distinct tone-difference
    /// frequencies.
    pub enforce_minimum: bool,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        FloquetOptions {
            truncation: DEFAULT_TRUNCATION,
            exact_cooling: false,
            enforce_minimum: true,
        }
    }
}

impl FloquetOptions {
    pub fn with_truncation(truncation: usize) -> Self {
        FloquetOptions {
            truncation,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ordering {
    Symmetrized,
    NormalOrdered,
    AntiNormalOrdered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    L,
    R,
    Int,
    Mech,
}

const PORTS: [Port; 4] = [Port::L, Port::R, Port::Int, Port::Mech];

/// Input-noise statistics per port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSpec {
    pub n_l: f64,
    pub n_r: f64,
    pub n_int: f64,
    pub n_mech: f64,
    pub ordering: Ordering,
}

impl CorrelatorSpec {
    pub fn new(n_l: f64, n_r: f64, n_int: f64, n_mech: f64, ordering: Ordering) -> Result<Self> {
        for (name, v) in [("n_l", n_l), ("n_r", n_r), ("n_int", n_int), ("n_mech", n_mech)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("occupancy must be >= 0, got {v}")));
            }
        }
        Ok(CorrelatorSpec {
            n_l,
            n_r,
            n_int,
            n_mech,
            ordering,
        })
    }

    pub fn from_params(params: &SystemParams, eff: &EffectiveMechanics, ordering: Ordering) -> Self {
        let b = params.n_c_bath();
        CorrelatorSpec {
            n_l: b.l,
            n_r: b.r,
            n_int: b.int,
            n_mech: eff.n_m_t,
            ordering,
        }
    }

    pub fn vacuum(ordering: Ordering) -> Self {
        CorrelatorSpec {
            n_l: 0.0,
            n_r: 0.0,
            n_int: 0.0,
            n_mech: 0.0,
            ordering,
        }
    }

    fn occupancy(&self, port: Port) -> f64 {
        match port {
            Port::L => self.n_l,
            Port::R => self.n_r,
            Port::Int => self.n_int,
            Port::Mech => self.n_mech,
        }
    }

    /// Weights of |annihilation coefficient|^2 and |creation coefficient|^2.
    fn weights(&self, port: Port) -> (f64, f64) {
        let n = self.occupancy(port);
        match self.ordering {
            Ordering::Symmetrized => (n + 0.5, n + 0.5),
            Ordering::NormalOrdered => (n, n + 1.0),
            Ordering::AntiNormalOrdered => (n + 1.0, n),
        }
    }
}

/// Quantity whose spectrum is requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Observable {
    /// Field leaving the right port; frequency is the offset from the cavity.
    OutputR,
    /// Intracavity fluctuation.
    Cavity,
    /// Mechanical quadrature x_zp (b e^{i phi} + b^dag e^{-i phi}) in the
    /// frame rotating at omega_r.
    Quadrature(f64),
    /// Displacement near resonance, sqrt(2) x_zp b.
    Displacement,
}

#[derive(Debug, Clone)]
struct Term {
    target: usize,
    source: usize,
    coeff: Complex64,
    shift: Vec<i32>,
}

/// Truncated lattice of sideband frequencies and the coupling terms between
/// them.
#[derive(Debug, Clone)]
pub struct SidebandLattice {
    pub order: usize,
    pub omega_r: f64,
    pub tone_frequencies: Vec<f64>,
    /// Frequency per unit step along each lattice axis; axis 0 is 2 omega_r.
    pub axis_frequencies: Vec<f64>,
    nodes: Vec<Vec<i32>>,
    index: HashMap<Vec<i32>, usize>,
    thetas: Vec<f64>,
    terms: Vec<Term>,
    m0: [Complex64; 4],
    rates: [(Port, f64); 4],
}

/// Distinct positive tone-difference frequencies.
pub fn distinct_differences(freqs: &[f64]) -> Vec<f64> {
    let scale = freqs.iter().fold(1.0f64, |m, f| m.max(f.abs()));
    let mut out: Vec<f64> = Vec::new();
    for (i, a) in freqs.iter().enumerate() {
        for b in &freqs[i + 1..] {
            let d = (a - b).abs();
            if d > 1e-12 * scale && !out.iter().any(|x| (x - d).abs() <= 1e-9 * scale) {
                out.push(d);
            }
        }
    }
    out
}

pub fn minimum_truncation(freqs: &[f64]) -> usize {
    2 * distinct_differences(freqs).len()
}

/// Frame frequency for the mechanics.
pub fn frame_frequency(params: &SystemParams, scheme: &DriveScheme) -> f64 {
    match scheme.variant {
        Scheme::DetunedTwoTone { delta, .. } => params.omega_m() + delta,
        _ => params.omega_m(),
    }
}

impl SidebandLattice {
    pub fn build(
        params: &SystemParams,
        eff: &EffectiveMechanics,
        scheme: &DriveScheme,
        opts: &FloquetOptions,
    ) -> Result<Self> {
        let mut tones: Vec<Tone> = scheme.tones(params)?;
        if opts.exact_cooling {
            if let Some(t) = scheme.cooling_tone(params)? {
                tones.push(t);
            }
        }
        let omega_r = frame_frequency(params, scheme);
        let tone_frequencies: Vec<f64> = tones.iter().map(|t| t.detuning_from_cavity).collect();
        let min_n = minimum_truncation(&tone_frequencies);
        if opts.enforce_minimum && opts.truncation < min_n {
            return Err(invalid(
                "truncation",
                format!("N = {} is below the minimum {min_n} for this drive", opts.truncation),
            ));
        }

        let tol = 1e-9 * omega_r;
        let mut axes = vec![2.0 * omega_r];
        // (s, axis, sign) per tone
        let mut placed = Vec::new();
        for t in &tones {
            let nu = t.detuning_from_cavity;
            let s: i32 = if nu >= 0.0 { 1 } else { -1 };
            let o = nu - s as f64 * omega_r;
            let aux = if o.abs() <= tol {
                None
            } else if let Some(k) = axes[1..].iter().position(|a| (a - o).abs() <= tol) {
                Some((k + 1, 1))
            } else if let Some(k) = axes[1..].iter().position(|a| (a + o).abs() <= tol) {
                Some((k + 1, -1))
            } else {
                axes.push(o);
                Some((axes.len() - 1, 1))
            };
            placed.push((s, aux));
        }
        let dim = axes.len();

        let g0 = params.g0();
        let i = Complex64::i();
        let mut terms = Vec::new();
        for (t, (s, aux)) in tones.iter().zip(&placed) {
            if t.photon_number == 0.0 {
                continue;
            }
            let a = t.amplitude() * g0;
            let ac = a.conj();
            let mut qp = vec![0i32; dim];
            let mut qm = vec![0i32; dim];
            qp[0] = (s + 1) / 2;
            qm[0] = (s - 1) / 2;
            if let Some((k, sign)) = aux {
                qp[*k] = *sign;
                qm[*k] = *sign;
            }
            let neg = |q: &Vec<i32>| q.iter().map(|x| -x).collect::<Vec<i32>>();
            let mut push = |target, source, coeff, shift: Vec<i32>| {
                terms.push(Term {
                    target,
                    source,
                    coeff,
                    shift,
                })
            };
            push(D, B, -i * a, qp.clone());
            push(D, BD, -i * a, qm.clone());
            push(B, D, -i * ac, neg(&qp));
            push(B, DD, -i * a, qm.clone());
            push(DD, BD, i * ac, neg(&qp));
            push(DD, B, i * ac, neg(&qm));
            push(BD, DD, i * a, qp.clone());
            push(BD, D, i * ac, neg(&qm));
        }

        let radius = (opts.truncation / 2) as i32;
        let mut nodes = Vec::new();
        enumerate_l1(dim, radius, &mut vec![0; dim], 0, radius, &mut nodes);
        nodes.sort_by_key(|n| (n.iter().map(|x| x.abs()).sum::<i32>(), n.clone()));
        let index = nodes.iter().enumerate().map(|(k, n)| (n.clone(), k)).collect();
        let thetas = nodes
            .iter()
            .map(|n| n.iter().zip(&axes).map(|(j, f)| *j as f64 * f).sum())
            .collect();

        let half_k = 0.5 * params.kappa();
        let dm = params.omega_m() - omega_r;
        let m0 = [
            Complex64::new(-half_k, 0.0),
            Complex64::new(-half_k, 0.0),
            Complex64::new(-0.5 * eff.gamma_m, -dm),
            Complex64::new(-0.5 * eff.gamma_m, dm),
        ];
        let rates = [
            (Port::L, params.kappa_l()),
            (Port::R, params.kappa_r()),
            (Port::Int, params.kappa_int()),
            (Port::Mech, eff.gamma_m),
        ];
        Ok(SidebandLattice {
            order: opts.truncation,
            omega_r,
            tone_frequencies,
            axis_frequencies: axes,
            nodes,
            index,
            thetas,
            terms,
            m0,
            rates,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        4 * self.nodes.len()
    }

    pub fn nodes(&self) -> &[Vec<i32>] {
        &self.nodes
    }

    pub fn node_index(&self, coords: &[i32]) -> Option<usize> {
        self.index.get(coords).copied()
    }

    pub fn theta(&self, node: usize) -> f64 {
        self.thetas[node]
    }

    /// System matrix `A(omega)` with `A U = N`.
    pub fn coupling_matrix(&self, omega: f64) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        let i = Complex64::i();
        for (p, th) in self.thetas.iter().enumerate() {
            for c in 0..4 {
                a[(4 * p + c, 4 * p + c)] = -i * (omega + th) - self.m0[c];
            }
        }
        let mut src = vec![0i32; self.axis_frequencies.len()];
        for (p, coords) in self.nodes.iter().enumerate() {
            for t in &self.terms {
                for (k, s) in src.iter_mut().enumerate() {
                    *s = coords[k] - t.shift[k];
                }
                if let Some(&q) = self.index.get(&src) {
                    a[(4 * p + t.target, 4 * q + t.source)] -= t.coeff;
                }
            }
        }
        a
    }

    fn observable_vector(&self, obs: Observable, xzp: f64) -> (Vec<Complex64>, bool) {
        let mut c = vec![Complex64::new(0.0, 0.0); self.dim()];
        let mut direct = false;
        match obs {
            Observable::OutputR => {
                c[D] = Complex64::new(-self.rates[1].1.sqrt(), 0.0);
                direct = true;
            }
            Observable::Cavity => c[D] = Complex64::new(1.0, 0.0),
            Observable::Quadrature(phi) => {
                c[B] = Complex64::from_polar(xzp, phi);
                c[BD] = Complex64::from_polar(xzp, -phi);
            }
            Observable::Displacement => c[B] = Complex64::new(std::f64::consts::SQRT_2 * xzp, 0.0),
        }
        (c, direct)
    }
}

fn enumerate_l1(dim: usize, radius: i32, cur: &mut Vec<i32>, k: usize, left: i32, out: &mut Vec<Vec<i32>>) {
    if k == dim {
        out.push(cur.clone());
        return;
    }
    for j in -left..=left {
        cur[k] = j;
        enumerate_l1(dim, radius, cur, k + 1, left - j.abs(), out);
    }
    cur[k] = 0;
}

/// Coefficients of one observable at one frequency on every input channel.
#[derive(Debug, Clone)]
pub struct Transfer {
    pub omega: f64,
    /// Per port: sum over lattice points of |annihilation coefficient|^2 and
    /// |creation coefficient|^2.
    pub port_weights: [(f64, f64); 4],
    /// Raw coefficients `[(node, port, is_creation, value)]`.
    pub coefficients: Vec<(usize, Port, bool, Complex64)>,
}

#[derive(Debug, Clone)]
pub struct Response {
    pub lattice: SidebandLattice,
    pub observable: Observable,
    pub omega_grid: Vec<f64>,
    pub transfers: Vec<Transfer>,
}

/// Solve the lattice system on `omega_grid` (frame frequencies) for one
/// observable.
pub fn solve_response(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    omega_grid: &[f64],
    observable: Observable,
    opts: &FloquetOptions,
) -> Result<Response> {
    let lattice = SidebandLattice::build(params, eff, scheme, opts)?;
    let xzp = derive_xzp(params);
    let (c, direct) = lattice.observable_vector(observable, xzp);
    let transfers = omega_grid
        .par_iter()
        .map(|&w| solve_point(&lattice, w, &c, direct))
        .collect::<Result<Vec<_>>>()?;
    Ok(Response {
        lattice,
        observable,
        omega_grid: omega_grid.to_vec(),
        transfers,
    })
}

fn solve_point(lat: &SidebandLattice, omega: f64, c: &[Complex64], direct: bool) -> Result<Transfer> {
    let a = lat.coupling_matrix(omega);
    let lu = a.transpose().lu();
    let rhs = nalgebra::DVector::from_column_slice(c);
    let y = lu.solve(&rhs).ok_or(Error::Singular { omega })?;
    if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Singular { omega });
    }
    let mut weights = [(0.0, 0.0); 4];
    let mut coefficients = Vec::with_capacity(8 * lat.n_nodes());
    for p in 0..lat.n_nodes() {
        for (k, (port, rate)) in lat.rates.iter().enumerate() {
            if *rate == 0.0 {
                continue;
            }
            let sr = rate.sqrt();
            let (ia, ic) = if *port == Port::Mech { (B, BD) } else { (D, DD) };
            let mut an = y[4 * p + ia] * sr;
            let cr = y[4 * p + ic] * sr;
            if direct && p == 0 && *port == Port::R {
                an += 1.0;
            }
            weights[k].0 += an.norm_sqr();
            weights[k].1 += cr.norm_sqr();
            coefficients.push((p, *port, false, an));
            coefficients.push((p, *port, true, cr));
        }
    }
    Ok(Transfer {
        omega,
        port_weights: weights,
        coefficients,
    })
}

/// Assemble the spectral density of the solved observable.
pub fn output_spectrum(response: &Response, correlators: &CorrelatorSpec, omega_grid: &[f64]) -> Result<Vec<f64>> {
    if omega_grid.len() != response.omega_grid.len()
        || omega_grid
            .iter()
            .zip(&response.omega_grid)
            .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
    {
        return Err(Error::GridMismatch("spectrum grid differs from the solved grid".into()));
    }
    Ok(response
        .transfers
        .iter()
        .map(|t| {
            PORTS
                .iter()
                .zip(&t.port_weights)
                .map(|(port, (wa, wc))| {
                    let (na, nc) = correlators.weights(*port);
                    wa * na + wc * nc
                })
                .sum()
        })
        .collect())
}

/// Spectrum of `observable` on `grid`, where the grid is read relative to
/// `reference` and shifted into the solver frame.
#[allow(clippy::too_many_arguments)]
pub fn spectrum(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    grid: &[f64],
    observable: Observable,
    kind: SpectrumKind,
    reference: Reference,
    frame_offset: f64,
    ordering: Ordering,
    opts: &FloquetOptions,
) -> Result<Spectrum> {
    let shifted: Vec<f64> = grid.iter().map(|w| w + frame_offset).collect();
    let resp = solve_response(params, eff, scheme, &shifted, observable, opts)?;
    let corr = CorrelatorSpec::from_params(params, eff, ordering);
    let values = output_spectrum(&resp, &corr, &shifted)?;
    Spectrum::new(grid.to_vec(), values, kind, reference, Backend::Floquet)
}

/// Offset of the mechanical resonance in the solver frame.
pub fn mechanical_offset(params: &SystemParams, scheme: &DriveScheme) -> f64 {
    params.omega_m() - frame_frequency(params, scheme)
}

/// Quadrature spectrum at angle `phi` around the mechanical resonance.
pub fn quadrature_spectrum(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    grid: &[f64],
    phi: f64,
    kind: SpectrumKind,
    opts: &FloquetOptions,
) -> Result<Spectrum> {
    spectrum(
        params,
        eff,
        scheme,
        grid,
        Observable::Quadrature(phi),
        kind,
        Reference::MechanicalResonance,
        mechanical_offset(params, scheme),
        Ordering::Symmetrized,
        opts,
    )
}

/// Displacement spectrum around the mechanical resonance.
pub fn displacement_spectrum(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    grid: &[f64],
    opts: &FloquetOptions,
) -> Result<Spectrum> {
    spectrum(
        params,
        eff,
        scheme,
        grid,
        Observable::Displacement,
        SpectrumKind::MechanicalX,
        Reference::MechanicalResonance,
        mechanical_offset(params, scheme),
        Ordering::Symmetrized,
        opts,
    )
}

/// Right-port output around a motional sideband of a two-tone drive. The
/// red sideband sits at `omega_m - omega_r` from the cavity, the blue one
/// at the mirror frequency.
pub fn sideband_spectrum(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    grid: &[f64],
    side: crate::spectra::Side,
    ordering: Ordering,
    opts: &FloquetOptions,
) -> Result<Spectrum> {
    let off = mechanical_offset(params, scheme);
    let center = match side {
        crate::spectra::Side::Red => off,
        crate::spectra::Side::Blue => -off,
    };
    spectrum(
        params,
        eff,
        scheme,
        grid,
        Observable::OutputR,
        SpectrumKind::CavityOutputQuanta,
        Reference::SidebandCenter,
        center,
        ordering,
        opts,
    )
}

/// Right-port output around the cavity resonance.
pub fn cavity_output_spectrum(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    grid: &[f64],
    ordering: Ordering,
    opts: &FloquetOptions,
) -> Result<Spectrum> {
    spectrum(
        params,
        eff,
        scheme,
        grid,
        Observable::OutputR,
        SpectrumKind::CavityOutputQuanta,
        Reference::CavityResonance,
        0.0,
        ordering,
        opts,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub truncation: usize,
    pub max_relative_change: f64,
    pub worst_omega: f64,
    pub converged: bool,
}

impl ConvergenceReport {
    pub fn to_text(&self) -> String {
        format!(
            "truncation={} max_relative_change={:.3e} worst_omega={:.6e} converged={}",
            self.truncation, self.max_relative_change, self.worst_omega, self.converged
        )
    }
}

/// Compare the solution at N and N + 2. Truncation minimums are not
/// enforced so that too-small N can be diagnosed.
pub fn convergence_report(
    params: &SystemParams,
    eff: &EffectiveMechanics,
    scheme: &DriveScheme,
    omega_grid: &[f64],
    observable: Observable,
    opts: &FloquetOptions,
) -> Result<ConvergenceReport> {
    let lo = FloquetOptions {
        enforce_minimum: false,
        ..*opts
    };
    let hi = FloquetOptions {
        truncation: opts.truncation + 2,
        ..lo
    };
    let corr = CorrelatorSpec::from_params(params, eff, Ordering::Symmetrized);
    let a = output_spectrum(
        &solve_response(params, eff, scheme, omega_grid, observable, &lo)?,
        &corr,
        omega_grid,
    )?;
    let b = output_spectrum(
        &solve_response(params, eff, scheme, omega_grid, observable, &hi)?,
        &corr,
        omega_grid,
    )?;
    let (mut worst, mut at) = (0.0f64, omega_grid.first().copied().unwrap_or(0.0));
    for ((x, y), w) in a.iter().zip(&b).zip(omega_grid) {
        let r = (x - y).abs() / y.abs().max(f64::MIN_POSITIVE);
        if r > worst {
            worst = r;
            at = *w;
        }
    }
    Ok(ConvergenceReport {
        truncation: opts.truncation,
        max_relative_change: worst,
        worst_omega: at,
        converged: worst < CONVERGENCE_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hz;
    use crate::spectra::{cavity_output_noise_at, uniform_grid};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn vacuum_output_is_half() {
        let p = SystemParams::device_default()
            .modified(|d| d.n_c_bath = Default::default())
            .unwrap();
        let eff = EffectiveMechanics::bare(&p).with_occupancy(0.0);
        let s = DriveScheme::bae(0.0);
        let grid = uniform_grid(p.kappa(), 41);
        let sp =
            cavity_output_spectrum(&p, &eff, &s, &grid, Ordering::Symmetrized, &FloquetOptions::default()).unwrap();
        for v in &sp.values {
            assert!((v - 0.5).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn decoupled_matches_cavity_noise() {
        let p = SystemParams::device_default()
            .modified(|d| d.g0 = 0.0)
            .unwrap()
            .with_total_cavity_occupancy(2.0)
            .unwrap();
        let eff = EffectiveMechanics::bare(&p);
        let grid = uniform_grid(2.0 * p.kappa(), 21);
        let sp = cavity_output_spectrum(
            &p,
            &eff,
            &DriveScheme::bae(1e6),
            &grid,
            Ordering::Symmetrized,
            &FloquetOptions::default(),
        )
        .unwrap();
        for (w, v) in grid.iter().zip(&sp.values) {
            assert!(rel(*v, cavity_output_noise_at(&p, *w)) < 1e-10);
        }
    }

    #[test]
    fn minimum_truncation_counts() {
        let p = SystemParams::device_default();
        let f = |s: &DriveScheme| {
            minimum_truncation(
                &s.tones(&p)
                    .unwrap()
                    .iter()
                    .map(|t| t.detuning_from_cavity)
                    .collect::<Vec<_>>(),
            )
        };
        assert_eq!(f(&DriveScheme::bae(1e6)), 2);
        assert_eq!(f(&DriveScheme::dtt(hz(5e3), 1e6)), 2);
        assert_eq!(f(&DriveScheme::bae_with_probe(1e6, 1e4, hz(30e3), 0.3)), 8);
        let eff = EffectiveMechanics::bare(&p);
        let s = DriveScheme::bae_with_probe(1e6, 1e4, hz(30e3), 0.3);
        assert!(SidebandLattice::build(&p, &eff, &s, &FloquetOptions::with_truncation(4)).is_err());
    }

    #[test]
    fn lattice_sizes() {
        let p = SystemParams::device_default();
        let eff = EffectiveMechanics::bare(&p);
        let l = SidebandLattice::build(&p, &eff, &DriveScheme::bae(1e6), &FloquetOptions::default()).unwrap();
        assert_eq!(l.n_nodes(), 9);
        let l = SidebandLattice::build(
            &p,
            &eff,
            &DriveScheme::bae_with_probe(1e6, 1e4, hz(30e3), 0.3),
            &FloquetOptions::default(),
        )
        .unwrap();
        assert_eq!(l.n_nodes(), 41);
        assert_eq!(l.axis_frequencies.len(), 2);
    }

    #[test]
    fn conjugation_symmetry() {
        // A(-omega) equals conj(A(omega)) after swapping each operator with
        // its adjoint and reflecting the lattice.
        let p = SystemParams::device_default();
        let eff = EffectiveMechanics::bare(&p);
        let s = DriveScheme::bae_with_probe(1e6, 1e4, hz(30e3), 0.7);
        let l = SidebandLattice::build(&p, &eff, &s, &FloquetOptions::default()).unwrap();
        let w = hz(1234.0);
        let a = l.coupling_matrix(w);
        let b = l.coupling_matrix(-w);
        let swap = [DD, D, BD, B];
        let refl: Vec<usize> = l
            .nodes()
            .iter()
            .map(|n| l.node_index(&n.iter().map(|x| -x).collect::<Vec<_>>()).unwrap())
            .collect();
        let idx = |k: usize| 4 * refl[k / 4] + swap[k % 4];
        for r in 0..l.dim() {
            for c in 0..l.dim() {
                let d = b[(idx(r), idx(c))] - a[(r, c)].conj();
                assert!(d.norm() < 1e-6 * (1.0 + a[(r, c)].norm()));
            }
        }
    }
}
