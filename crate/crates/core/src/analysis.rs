//! Lorentzian fitting, sideband averaging and the small regressions used by
//! the calibration pipelines.
//!
//! The Lorentzian model is `floor + area * fwhm / ((omega - center)^2 + fwhm^2/4)`,
//! so `area` is the integral of the peak over `d omega / 2 pi`, i.e. a
//! variance in the units of the spectrum.

use nalgebra::{Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectra::{lorentzian, Backend, Reference, Spectrum};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub intervals: Vec<(f64, f64)>,
}

impl MaskSpec {
    pub fn none() -> Self {
        MaskSpec::default()
    }

    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if let Some((lo, hi)) = intervals.iter().find(|(lo, hi)| !(lo < hi)) {
            return Err(invalid("mask", format!("interval ({lo}, {hi}) is empty")));
        }
        Ok(MaskSpec { intervals })
    }

    /// Single interval of `width` centred on `center`.
    pub fn centered(center: f64, width: f64) -> Result<Self> {
        Self::new(vec![(center - 0.5 * width, center + 0.5 * width)])
    }

    pub fn masks(&self, omega: f64) -> bool {
        self.intervals.iter().any(|(lo, hi)| omega >= *lo && omega <= *hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// (center, fwhm, area, floor); derived from the data when absent.
    pub init: Option<[f64; 4]>,
    /// Per-bin standard deviations. Uniform weights when absent.
    pub sigma: Option<Vec<f64>>,
    /// Treat `sigma` as absolute rather than rescaling the covariance by the
    /// reduced chi-square.
    pub absolute_sigma: bool,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            init: None,
            sigma: None,
            absolute_sigma: false,
            max_iter: 200,
            tol: 1e-10,
        }
    }
}

impl FitOptions {
    pub fn with_sigma(sigma: Vec<f64>) -> Self {
        FitOptions {
            sigma: Some(sigma),
            absolute_sigma: true,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub center: f64,
    pub fwhm: f64,
    pub area: f64,
    pub floor: f64,
    /// Parameter order (center, fwhm, area, floor).
    pub covariance: [[f64; 4]; 4],
    pub reduced_chi2: f64,
    pub iterations: usize,
    /// Peak not significant: area below three standard errors.
    pub low_signal: bool,
}

impl LorentzianFit {
    pub fn eval(&self, omega: f64) -> f64 {
        self.floor + self.area * lorentzian(omega - self.center, self.fwhm)
    }

    pub fn peak_height(&self) -> f64 {
        4.0 * self.area / self.fwhm
    }

    pub fn sigma(&self, k: usize) -> f64 {
        self.covariance[k][k].max(0.0).sqrt()
    }

    pub fn sigma_area(&self) -> f64 {
        self.sigma(2)
    }

    pub fn sigma_fwhm(&self) -> f64 {
        self.sigma(1)
    }

    pub fn csv_header() -> String {
        let names = ["center", "fwhm", "area", "floor"];
        let mut cols = vec![
            "center".to_string(),
            "fwhm".into(),
            "area".into(),
            "floor".into(),
            "reduced_chi2".into(),
            "low_signal".into(),
        ];
        for a in names {
            for b in names {
                cols.push(format!("cov_{a}_{b}"));
            }
        }
        cols.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        let mut cols = vec![
            format!("{:.12e}", self.center),
            format!("{:.12e}", self.fwhm),
            format!("{:.12e}", self.area),
            format!("{:.12e}", self.floor),
            format!("{:.6e}", self.reduced_chi2),
            self.low_signal.to_string(),
        ];
        for row in &self.covariance {
            for v in row {
                cols.push(format!("{v:.6e}"));
            }
        }
        cols.join(",")
    }
}

fn model_and_grad(p: &[f64; 4], w: f64) -> (f64, [f64; 4]) {
    let [c, g, a, f] = *p;
    let u = w - c;
    let d = u * u + 0.25 * g * g;
    let d2 = d * d;
    (
        f + a * g / d,
        [a * g * 2.0 * u / d2, a * (u * u - 0.25 * g * g) / d2, g / d, 1.0],
    )
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Deterministic starting point: argmax, median floor, second moment of the
/// half-maximum region.
pub fn initial_guess(x: &[f64], y: &[f64]) -> [f64; 4] {
    let imax = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let floor = median(&mut y.to_vec());
    let peak = y[imax];
    let half = floor + 0.5 * (peak - floor);
    let (mut lo, mut hi) = (imax, imax);
    while lo > 0 && y[lo - 1] > half {
        lo -= 1;
    }
    while hi + 1 < y.len() && y[hi + 1] > half {
        hi += 1;
    }
    let dx = if x.len() > 1 {
        (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64
    } else {
        1.0
    };
    let fwhm = if hi - lo >= 2 {
        let (mut sw, mut s2) = (0.0, 0.0);
        for i in lo..=hi {
            let wgt = y[i] - floor;
            sw += wgt;
            s2 += wgt * (x[i] - x[imax]).powi(2);
        }
        // half-maximum region of a Lorentzian: sigma = 0.2614 fwhm
        3.826 * (s2 / sw).sqrt()
    } else {
        2.0 * dx.abs()
    };
    let fwhm = fwhm.max(dx.abs());
    [x[imax], fwhm, ((peak - floor) * fwhm / 4.0).max(0.0), floor]
}

/// Damped least-squares fit of a Lorentzian plus floor.
pub fn fit_lorentzian(spectrum: &Spectrum, mask: &MaskSpec, opts: &FitOptions) -> Result<LorentzianFit> {
    fit_lorentzian_xy(&spectrum.freq_grid, &spectrum.values, mask, opts)
}

pub fn fit_lorentzian_xy(x: &[f64], y: &[f64], mask: &MaskSpec, opts: &FitOptions) -> Result<LorentzianFit> {
    if x.len() != y.len() {
        return Err(Error::GridMismatch("x and y lengths differ".into()));
    }
    if let Some(s) = &opts.sigma {
        if s.len() != x.len() || s.iter().any(|v| !(*v > 0.0)) {
            return Err(invalid("sigma", "must match the grid and be > 0"));
        }
    }
    let (lo, hi) = (x[0], x[x.len() - 1]);
    if mask.intervals.iter().any(|(a, b)| *a < lo || *b > hi) {
        return Err(invalid("mask", "interval outside the fit window"));
    }
    let keep: Vec<usize> = (0..x.len()).filter(|&i| !mask.masks(x[i])).collect();
    let masked = x.len() - keep.len();
    if masked as f64 >= 0.2 * x.len() as f64 {
        return Err(invalid(
            "mask",
            format!("masks {masked} of {} bins (limit 20%)", x.len()),
        ));
    }
    if keep.len() < 5 {
        return Err(Error::Degenerate("fewer than 5 unmasked bins".into()));
    }
    let xs: Vec<f64> = keep.iter().map(|&i| x[i]).collect();
    // work with values of order one; physical spectra can be ~1e-30
    let unit = keep.iter().fold(0.0f64, |m, &i| m.max(y[i].abs()));
    let unit = if unit > 0.0 && unit.is_finite() { unit } else { 1.0 };
    let ys: Vec<f64> = keep.iter().map(|&i| y[i] / unit).collect();
    let ws: Vec<f64> = match &opts.sigma {
        Some(s) => keep.iter().map(|&i| (unit / s[i]).powi(2)).collect(),
        None => vec![1.0; keep.len()],
    };

    let mut p = match opts.init {
        Some(q) => [q[0], q[1], q[2] / unit, q[3] / unit],
        None => initial_guess(&xs, &ys),
    };
    let yscale = ys.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let xscale = (hi - lo).abs().max(f64::MIN_POSITIVE);
    let scales = [xscale, xscale, yscale * xscale, yscale];
    // narrower peaks are not resolved by the grid
    let min_fwhm = 0.5 * xscale / (x.len() - 1) as f64;
    p[1] = p[1].max(min_fwhm);

    let chi2 = |p: &[f64; 4]| -> f64 {
        xs.iter()
            .zip(&ys)
            .zip(&ws)
            .map(|((w, v), wt)| wt * (v - model_and_grad(p, *w).0).powi(2))
            .sum()
    };
    let normal = |p: &[f64; 4]| -> (Matrix4<f64>, Vector4<f64>) {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for ((w, v), wt) in xs.iter().zip(&ys).zip(&ws) {
            let (m, g) = model_and_grad(p, *w);
            let gv = Vector4::from(g);
            jtj += gv * gv.transpose() * *wt;
            jtr += gv * ((v - m) * wt);
        }
        (jtj, jtr)
    };

    let mut cost = chi2(&p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let (jtj, jtr) = normal(&p);
        let mut improved = false;
        while lambda < 1e20 {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30 / (scales[k] * scales[k]));
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
            if trial[1] < min_fwhm || trial[2] < 0.0 || !trial.iter().all(|v| v.is_finite()) {
                lambda *= 10.0;
                continue;
            }
            let c = chi2(&trial);
            if c <= cost {
                let small = (0..4).all(|k| step[k].abs() <= opts.tol * (trial[k].abs() + 1e-3 * scales[k]));
                p = trial;
                let flat = (cost - c) <= 1e-15 * cost.max(f64::MIN_POSITIVE);
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                converged = small || (flat && step.norm() == 0.0);
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !improved {
            // no downhill step at any damping: at the minimum to working precision
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            last: p.to_vec(),
        });
    }

    let dof = xs.len().saturating_sub(4).max(1) as f64;
    let reduced_chi2 = cost / dof;
    let (jtj, _) = normal(&p);
    let inv = jtj
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular fit curvature".into()))?;
    let s = if opts.sigma.is_some() && opts.absolute_sigma {
        1.0
    } else {
        reduced_chi2
    };
    let mut covariance = [[0.0; 4]; 4];
    for (r, row) in covariance.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let f = |k: usize| if k >= 2 { unit } else { 1.0 };
            *v = 0.5 * (inv[(r, c)] + inv[(c, r)]) * s * f(r) * f(c);
        }
    }
    let fit = LorentzianFit {
        center: p[0],
        fwhm: p[1],
        area: p[2] * unit,
        floor: p[3] * unit,
        covariance,
        reduced_chi2,
        iterations,
        low_signal: false,
    };
    let sa = fit.sigma_area();
    let low_signal = !(fit.area > 3.0 * sa);
    if hi - lo < 5.0 * fit.fwhm && !low_signal {
        return Err(Error::Degenerate(format!(
            "fit window {:.3e} rad/s is narrower than 5 linewidths ({:.3e})",
            hi - lo,
            fit.fwhm
        )));
    }
    Ok(LorentzianFit { low_signal, ..fit })
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0))
}

/// Pointwise mean of the red and blue sidebands, each referenced to its own
/// centre.
pub fn average_sidebands(red: &Spectrum, blue: &Spectrum) -> Result<Spectrum> {
    if red.reference != Reference::SidebandCenter || blue.reference != Reference::SidebandCenter {
        return Err(Error::GridMismatch(
            "sidebands must be referenced to their centres".into(),
        ));
    }
    if red.kind != blue.kind {
        return Err(Error::GridMismatch("sideband spectra are of different kinds".into()));
    }
    if !same_grid(&red.freq_grid, &blue.freq_grid) {
        return Err(Error::GridMismatch("sideband grids are not aligned".into()));
    }
    let values = red
        .values
        .iter()
        .zip(&blue.values)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let source = if red.source == blue.source {
        red.source
    } else {
        Backend::External
    };
    Spectrum::new(
        red.freq_grid.clone(),
        values,
        red.kind,
        Reference::SidebandCenter,
        source,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asymmetry {
    pub red: LorentzianFit,
    pub blue: LorentzianFit,
    /// Blue area over red area.
    pub ratio: f64,
    pub sigma_ratio: f64,
}

/// Blue/red sideband area ratio. Symmetrised classical noise cannot
/// carry the quantum asymmetry, so stochastic spectra are refused.
pub fn sideband_asymmetry(red: &Spectrum, blue: &Spectrum, mask: &MaskSpec, opts: &FitOptions) -> Result<Asymmetry> {
    for s in [red, blue] {
        if s.source == Backend::Stochastic {
            return Err(Error::NotAllowed(
                "sideband asymmetry cannot be measured on stochastic (symmetrised classical) spectra".into(),
            ));
        }
    }
    let r = fit_lorentzian(red, mask, opts)?;
    let b = fit_lorentzian(blue, mask, opts)?;
    let ratio = b.area / r.area;
    let sigma_ratio = ratio * ((b.sigma_area() / b.area).powi(2) + (r.sigma_area() / r.area).powi(2)).sqrt();
    Ok(Asymmetry {
        red: r,
        blue: b,
        ratio,
        sigma_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupancyEstimate {
    pub n_m: f64,
    /// <x^2> / x_zp^2 = 1 + 2 n_m.
    pub variance_xzp2: f64,
}

/// Occupancy from a calibrated sideband power ratio.
pub fn extract_occupancy(sideband_power: f64, through_power: f64, factor: f64) -> Result<OccupancyEstimate> {
    if !(through_power > 0.0) {
        return Err(invalid("through_power", "must be > 0"));
    }
    let n_m = factor * sideband_power / through_power;
    Ok(OccupancyEstimate {
        n_m,
        variance_xzp2: 1.0 + 2.0 * n_m,
    })
}

/// Same, taking the sideband power from a fit.
pub fn extract_occupancy_from_fit(fit: &LorentzianFit, through_power: f64, factor: f64) -> Result<OccupancyEstimate> {
    extract_occupancy(fit.area, through_power, factor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Order (slope, intercept).
    pub covariance: [[f64; 2]; 2],
    pub chi2: f64,
}

impl LinearFit {
    pub fn sigma_slope(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn sigma_intercept(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Weighted least squares for `y = slope x + intercept` with absolute
/// errors `sigma`.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() != sigma.len() {
        return Err(Error::GridMismatch("x, y and sigma lengths differ".into()));
    }
    if x.len() < 2 {
        return Err(Error::Degenerate("need at least 2 points".into()));
    }
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(invalid("sigma", "must be > 0"));
    }
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((xi, yi), si) in x.iter().zip(y).zip(sigma) {
        let w = 1.0 / (si * si);
        s += w;
        sx += w * xi;
        sy += w * yi;
        sxx += w * xi * xi;
        sxy += w * xi * yi;
    }
    let m = Matrix2::new(sxx, sx, sx, s);
    let det = m.determinant();
    if det.abs() <= 1e-14 * sxx * s {
        return Err(Error::Degenerate("all x values coincide".into()));
    }
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular normal matrix".into()))?;
    let slope = inv[(0, 0)] * sxy + inv[(0, 1)] * sy;
    let intercept = inv[(1, 0)] * sxy + inv[(1, 1)] * sy;
    let chi2 = x
        .iter()
        .zip(y)
        .zip(sigma)
        .map(|((xi, yi), si)| ((yi - slope * xi - intercept) / si).powi(2))
        .sum();
    Ok(LinearFit {
        slope,
        intercept,
        covariance: [[inv[(0, 0)], inv[(0, 1)]], [inv[(1, 0)], inv[(1, 1)]]],
        chi2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationFit {
    /// Coefficient of sin^2 phi.
    pub a: f64,
    pub b: f64,
    /// Order (a, b).
    pub covariance: [[f64; 2]; 2],
}

impl RotationFit {
    pub fn x1_variance(&self) -> f64 {
        self.b
    }

    pub fn x2_variance(&self) -> f64 {
        self.a + self.b
    }

    pub fn sigma_x2(&self) -> f64 {
        (self.covariance[0][0] + self.covariance[1][1] + 2.0 * self.covariance[0][1])
            .max(0.0)
            .sqrt()
    }
}

/// Fit `<X(phi)^2> = a sin^2 phi + b`. Points are `(phi, variance, sigma)`;
/// at least two distinct values of sin^2 phi are required.
pub fn fit_rotation(points: &[(f64, f64, f64)]) -> Result<RotationFit> {
    let x: Vec<f64> = points.iter().map(|p| p.0.sin().powi(2)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let s: Vec<f64> = points.iter().map(|p| p.2).collect();
    let spread = x.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - x.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if points.len() < 2 || spread < 1e-9 {
        return Err(Error::Degenerate("rotation angles are all equivalent modulo pi".into()));
    }
    let f = weighted_linear_fit(&x, &y, &s)?;
    Ok(RotationFit {
        a: f.slope,
        b: f.intercept,
        covariance: f.covariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{uniform_grid, SpectrumKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn synth(c: f64, g: f64, a: f64, f: f64, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|w| f + a * lorentzian(w - c, g)).collect()
    }

    #[test]
    fn noiseless_recovery() {
        let grid = uniform_grid(2500.0, 2001);
        let y = synth(12.0, 100.0, 3.0, 0.01, &grid);
        let fit = fit_lorentzian_xy(&grid, &y, &MaskSpec::none(), &FitOptions::default()).unwrap();
        for (got, want) in [
            (fit.center, 12.0),
            (fit.fwhm, 100.0),
            (fit.area, 3.0),
            (fit.floor, 0.01),
        ] {
            assert!(((got - want) / want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!(!fit.low_signal);
    }

    #[test]
    fn masked_noisy_recovery() {
        let grid = uniform_grid(2.0 * PI * 2500.0, 2001);
        let g = 2.0 * PI * 100.0;
        let clean = synth(0.0, g, 1.0, 0.2 * 4.0 / g, &grid);
        let noise = Normal::new(0.0, 0.02 * 4.0 / g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mask = MaskSpec::centered(0.0, 2.0 * PI * 5.0).unwrap();
        let mut areas = Vec::new();
        for _ in 0..20 {
            let y: Vec<f64> = clean.iter().map(|v| v + noise.sample(&mut rng)).collect();
            areas.push(
                fit_lorentzian_xy(&grid, &y, &mask, &FitOptions::default())
                    .unwrap()
                    .area,
            );
        }
        let m = areas.iter().sum::<f64>() / areas.len() as f64;
        assert!((m - 1.0).abs() < 0.01, "mean area {m}");
    }

    #[test]
    fn mask_limits() {
        let grid = uniform_grid(10.0, 101);
        let y = synth(0.0, 1.0, 1.0, 0.0, &grid);
        let big = MaskSpec::new(vec![(-3.0, 3.0)]).unwrap();
        assert!(fit_lorentzian_xy(&grid, &y, &big, &FitOptions::default()).is_err());
        let outside = MaskSpec::new(vec![(20.0, 21.0)]).unwrap();
        assert!(fit_lorentzian_xy(&grid, &y, &outside, &FitOptions::default()).is_err());
    }

    #[test]
    fn flat_data_is_low_signal() {
        let grid = uniform_grid(10.0, 201);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = Normal::new(1.0, 0.01).unwrap();
        let y: Vec<f64> = grid.iter().map(|_| n.sample(&mut rng)).collect();
        let fit = fit_lorentzian_xy(&grid, &y, &MaskSpec::none(), &FitOptions::default()).unwrap();
        assert!(fit.low_signal);
    }

    #[test]
    fn average_sideband_weights() {
        let grid = uniform_grid(50.0, 501);
        let mk = |w: f64| {
            Spectrum::new(
                grid.clone(),
                synth(0.0, 1.0, w, 0.5, &grid),
                SpectrumKind::CavityOutputQuanta,
                Reference::SidebandCenter,
                Backend::ClosedForm,
            )
            .unwrap()
        };
        let avg = average_sidebands(&mk(64.0), &mk(67.0)).unwrap();
        let fit = fit_lorentzian(&avg, &MaskSpec::none(), &FitOptions::default()).unwrap();
        assert!((fit.area - 65.5).abs() < 1e-6);
        assert_eq!(
            average_sidebands(&mk(64.0), &mk(67.0)).unwrap(),
            average_sidebands(&mk(67.0), &mk(64.0)).unwrap()
        );
        let red = mk(64.0);
        assert_eq!(average_sidebands(&red, &red).unwrap().values, red.values);
        let other = Spectrum::new(
            uniform_grid(40.0, 501),
            vec![1.0; 501],
            SpectrumKind::CavityOutputQuanta,
            Reference::SidebandCenter,
            Backend::ClosedForm,
        )
        .unwrap();
        assert!(matches!(average_sidebands(&red, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn asymmetry_refuses_stochastic() {
        let grid = uniform_grid(50.0, 501);
        let s = Spectrum::new(
            grid.clone(),
            synth(0.0, 1.0, 1.0, 0.5, &grid),
            SpectrumKind::CavityOutputQuanta,
            Reference::SidebandCenter,
            Backend::Stochastic,
        )
        .unwrap();
        assert!(matches!(
            sideband_asymmetry(&s, &s, &MaskSpec::none(), &FitOptions::default()),
            Err(Error::NotAllowed(_))
        ));
    }

    #[test]
    fn occupancy_examples() {
        let o = extract_occupancy(37.5 / 9.71e8, 1.0, 9.71e8).unwrap();
        assert!((o.n_m - 37.5).abs() < 1e-9);
        assert_eq!(extract_occupancy(0.0, 1.0, 9.71e8).unwrap().n_m, 0.0);
    }

    #[test]
    fn rotation_examples() {
        let pts: Vec<(f64, f64, f64)> = [0.0, 0.4, 0.9, 1.3, PI / 2.0]
            .iter()
            .map(|&p: &f64| (p, 3.0 + 87.0 * p.sin().powi(2), 1.0))
            .collect();
        let f = fit_rotation(&pts).unwrap();
        assert!((f.a - 87.0).abs() < 1e-9 && (f.b - 3.0).abs() < 1e-9);
        let two = fit_rotation(&[(0.0, 3.0, 1.0), (PI / 2.0, 90.0, 1.0)]).unwrap();
        assert!((two.x2_variance() - 90.0).abs() < 1e-12 && (two.x1_variance() - 3.0).abs() < 1e-12);
        assert!(fit_rotation(&[(0.3, 1.0, 1.0), (0.3 + PI, 2.0, 1.0)]).is_err());
    }

    #[test]
    fn linear_fit_examples() {
        let f = weighted_linear_fit(&[1.0, 3.0], &[2.0, 6.0], &[1.0, 1.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && f.intercept.abs() < 1e-12);
        assert!(weighted_linear_fit(&[1.0], &[1.0], &[1.0]).is_err());
        assert!(weighted_linear_fit(&[1.0, 1.0], &[1.0, 2.0], &[1.0, 1.0]).is_err());
    }
}
