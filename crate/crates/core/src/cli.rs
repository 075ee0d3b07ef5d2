//! Command-line front end. `run` parses arguments, dispatches and returns
//! the process exit code: 0 success, 1 failed check or run error,
//! 2 configuration or usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::floquet::{self, Observable};
use crate::model::{derive_xzp, hz, DriveScheme};
use crate::plot::{line_plot, Series};
use crate::protocols::{
    self, params_for_nc, point_seed, reproduce, simulate_spectrum, Context, ExperimentReport, FigureId, Target,
    FIGURE_IDS,
};
use crate::spectra::{self, uniform_grid, Backend, ReadoutChain, Side};
use crate::stochastic::{self, EnsembleConfig};

/// Seed used when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 2016;

#[derive(Debug, Parser)]
#[command(
    name = "optomech",
    version,
    about = "Multi-tone cavity electromechanics noise spectra and BAE protocols"
)]
pub struct Cli {
    /// TOML configuration; the shipped device configuration when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = BackendArg::ClosedForm)]
    pub backend: BackendArg,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Floquet sideband truncation (overrides the configuration).
    #[arg(long, global = true)]
    pub truncation: Option<usize>,
    /// Also write an SVG plot next to each CSV.
    #[arg(long, global = true)]
    pub plot: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    ClosedForm,
    Floquet,
    Stochastic,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::ClosedForm => Backend::ClosedForm,
            BackendArg::Floquet => Backend::Floquet,
            BackendArg::Stochastic => Backend::Stochastic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Dtt,
    Bae,
    Probe,
    /// Undriven cavity.
    Cavity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Displacement,
    X1,
    X2,
    /// Quadrature at `--phi-deg`.
    Phi,
    Red,
    Blue,
    Cavity,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one spectrum as CSV.
    Spectrum {
        #[arg(long, value_enum, default_value_t = SchemeArg::Bae)]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value_t = TargetArg::X2)]
        target: TargetArg,
        #[arg(long, default_value_t = 90.0)]
        phi_deg: f64,
    },
    /// Run the procedure behind a figure and check its claims.
    Reproduce {
        #[arg(value_parser = figure_ids())]
        figure: String,
    },
    /// Run the calibration chain on synthetic data.
    Calibrate,
    /// Oracle and invariant checks.
    Validate,
}

fn figure_ids() -> clap::builder::PossibleValuesParser {
    let mut ids: Vec<&'static str> = FIGURE_IDS.to_vec();
    ids.push("all");
    clap::builder::PossibleValuesParser::new(ids)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::Io(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn context(cli: &Cli) -> Result<Context> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::device_default(),
    };
    let mut ctx = Context::new(cfg, cli.seed, cli.backend.into())?;
    if let Some(n) = cli.truncation {
        if n == 0 {
            return Err(Error::Config("--truncation must be >= 1".into()));
        }
        ctx.floquet.truncation = n;
    }
    Ok(ctx)
}

fn header(ctx: &Context) -> String {
    format!("config_digest={}, seed={}", ctx.cfg.digest(), ctx.seed)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<i32> {
    let ctx = context(cli)?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", cli.out.display())))?;
    match &cli.command {
        Command::Spectrum {
            scheme,
            target,
            phi_deg,
        } => cmd_spectrum(cli, &ctx, *scheme, *target, *phi_deg),
        Command::Reproduce { figure } => cmd_reproduce(cli, &ctx, figure),
        Command::Calibrate => cmd_calibrate(cli, &ctx),
        Command::Validate => cmd_validate(&ctx),
    }
}

fn cmd_spectrum(cli: &Cli, ctx: &Context, scheme: SchemeArg, target: TargetArg, phi_deg: f64) -> Result<i32> {
    let cfg = &ctx.cfg;
    let phi = phi_deg.to_radians();
    let (params, drive) = match scheme {
        SchemeArg::Dtt => (params_for_nc(&ctx.params, cfg.dtt.n_c)?, cfg.dtt_scheme()),
        SchemeArg::Bae => (params_for_nc(&ctx.params, cfg.bae.n_c)?, cfg.bae_scheme()),
        SchemeArg::Probe => (params_for_nc(&ctx.params, cfg.probe.n_c)?, cfg.probe_scheme(phi)),
        SchemeArg::Cavity => (ctx.params.clone(), DriveScheme::bae(0.0)),
    };
    let eff = cfg.mechanics();
    let (t, grid) = match target {
        TargetArg::Displacement => (Target::Displacement, ctx.grid(eff.gamma_m)),
        TargetArg::X1 => (Target::Quadrature(0.0), ctx.grid(eff.gamma_m)),
        TargetArg::X2 => (Target::Quadrature(std::f64::consts::FRAC_PI_2), ctx.grid(eff.gamma_m)),
        TargetArg::Phi => (Target::Quadrature(phi), ctx.grid(eff.gamma_m)),
        TargetArg::Red => (Target::Sideband(Side::Red), ctx.grid(eff.gamma_m)),
        TargetArg::Blue => (Target::Sideband(Side::Blue), ctx.grid(eff.gamma_m)),
        TargetArg::Cavity => (
            Target::CavityOutput,
            uniform_grid(5.0 * params.kappa(), cfg.analysis.grid_points),
        ),
    };
    let s = simulate_spectrum(ctx, &params, &eff, &drive, t, &grid, ctx.seed)?;
    let stem = format!(
        "spectrum_{}_{}_{}",
        scheme.to_possible_value().unwrap().get_name(),
        target.to_possible_value().unwrap().get_name(),
        ctx.backend.name()
    );
    let comments = vec![
        header(ctx),
        format!("scheme={:?}, target={:?}, phi_deg={phi_deg}", scheme, target).to_lowercase(),
    ];
    let path = cli.out.join(format!("{stem}.csv"));
    write(&path, &s.to_csv(&comments))?;
    if cli.plot {
        let x: Vec<f64> = s.freq_grid.iter().map(|w| crate::model::to_hz(*w)).collect();
        let svg = line_plot(
            &stem,
            "offset (Hz)",
            s.units(),
            &[Series {
                label: s.kind.name().into(),
                x: &x,
                y: &s.values,
            }],
            false,
        );
        write(&cli.out.join(format!("{stem}.svg")), &svg)?;
    }
    println!("wrote {} ({} points)", path.display(), s.len());
    Ok(0)
}

struct PlotSpec {
    group: Option<&'static str>,
    x: &'static str,
    ys: &'static [&'static str],
    log_y: bool,
}

fn plot_spec(name: &str) -> Option<PlotSpec> {
    let p = |group, x, ys, log_y| Some(PlotSpec { group, x, ys, log_y });
    match name {
        "fig1c" => p(None, "n_m", &["power_ratio", "power_ratio_fit"], false),
        "fig1d" => p(None, "p_thru_w", &["gamma_opt_hz", "gamma_opt_fit_hz"], false),
        "fig2a" => p(Some("panel"), "offset_hz", &["psd_m2_per_rad_s"], true),
        "fig3c" => p(Some("phi_deg"), "offset_hz", &["psd_m2_per_rad_s"], true),
        "fig2b_dtt" => p(None, "n_p_per_tone", &["n_ba", "n_ba_model", "imprecision_xzp2"], true),
        "fig2b_bae" => p(
            None,
            "n_p_total",
            &[
                "x1_ba",
                "x2_ba",
                "quantum_reference",
                "imprecision_quantum_limit",
                "imprecision_model",
            ],
            true,
        ),
        "fig3b" => p(None, "phi_deg", &["variance", "variance_model"], false),
        "fig3d" => p(Some("delta_eta"), "phi_deg", &["variance"], false),
        "fig3e" => p(None, "delta_eta", &["normalized_backaction", "normalized_model"], false),
        _ => None,
    }
}

fn plot_report(rep: &ExperimentReport) -> Option<String> {
    let spec = plot_spec(&rep.name)?;
    let x = rep.column(spec.x)?;
    let mut owned: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
    for y in spec.ys {
        let yv = rep.column(y)?;
        match spec.group {
            None => owned.push((y.to_string(), x.clone(), yv)),
            Some(g) => {
                let gv = rep.column(g)?;
                let mut keys: Vec<f64> = Vec::new();
                for k in &gv {
                    if !keys.contains(k) {
                        keys.push(*k);
                    }
                }
                for k in keys {
                    let idx: Vec<usize> = (0..gv.len()).filter(|&i| gv[i] == k).collect();
                    owned.push((
                        format!("{g}={k}"),
                        idx.iter().map(|&i| x[i]).collect(),
                        idx.iter().map(|&i| yv[i]).collect(),
                    ));
                }
            }
        }
    }
    let series: Vec<Series> = owned
        .iter()
        .map(|(l, x, y)| Series { label: l.clone(), x, y })
        .collect();
    Some(line_plot(&rep.name, spec.x, "value", &series, spec.log_y))
}

fn cmd_reproduce(cli: &Cli, ctx: &Context, figure: &str) -> Result<i32> {
    let figs: Vec<FigureId> = if figure == "all" {
        FIGURE_IDS.iter().filter_map(|f| FigureId::parse(f)).collect()
    } else {
        vec![FigureId::parse(figure).ok_or_else(|| Error::Config(format!("unknown figure `{figure}`")))?]
    };
    let mut manifest = format!("# {}\nfile,report,backend,point_index,point_seed\n", header(ctx));
    let mut failed = false;
    for fig in figs {
        for rep in reproduce(ctx, fig)? {
            let file = format!("{}.csv", rep.name);
            write(&cli.out.join(&file), &rep.to_csv())?;
            if cli.plot {
                if let Some(svg) = plot_report(&rep) {
                    write(&cli.out.join(format!("{}.svg", rep.name)), &svg)?;
                }
            }
            match rep.column("point_seed") {
                Some(seeds) => {
                    for (i, s) in seeds.iter().enumerate() {
                        manifest.push_str(&format!(
                            "{file},{},{},{i},{}\n",
                            rep.name,
                            rep.provenance.backend.name(),
                            *s as u64
                        ));
                    }
                }
                None => manifest.push_str(&format!(
                    "{file},{},{},,{}\n",
                    rep.name,
                    rep.provenance.backend.name(),
                    rep.provenance.seed
                )),
            }
            println!("{} -> {}", rep.name, cli.out.join(&file).display());
            for a in &rep.annotations {
                println!("  note: {a}");
            }
            for c in &rep.checks {
                println!("  {}", c.line());
            }
            failed |= !rep.all_gating_pass();
        }
    }
    write(&cli.out.join("manifest.csv"), &manifest)?;
    Ok(if failed { 1 } else { 0 })
}

fn cmd_calibrate(cli: &Cli, ctx: &Context) -> Result<i32> {
    let p = &ctx.params;
    let c = &ctx.cfg.calibration;
    let th_pts =
        protocols::synth_thermal_points(p, &c.temperatures_k, c.thermal_relative_noise, point_seed(ctx.seed, 0));
    let th = protocols::thermal_calibration(p, &th_pts)?;
    let ph_pts = protocols::synth_photon_points(
        p,
        c.beta_per_watt,
        &c.through_powers_w,
        c.photon_relative_noise,
        point_seed(ctx.seed, 1),
    );
    let ph = protocols::photon_calibration(p, th.g0, th.g0_sigma, &ph_pts)?;
    let chain: ReadoutChain = ctx.cfg.readout(p)?;
    let n_add = ctx.cfg.amplifier_added_quanta(p);
    let alpha = protocols::calibrate_alpha(p, chain.eta0(p), 0.01 * chain.eta0(p), n_add)?;
    let grid = uniform_grid(8.0 * p.kappa(), 801);
    let pump_off = protocols::synth_pump_off_spectrum(p, &chain, &grid, 0.002, point_seed(ctx.seed, 2))?;
    let ncr = protocols::estimate_ncr(p, &chain, &pump_off)?;

    let mut csv = format!("# {}\nkind,value,uncertainty,inputs_digest,flags\n", header(ctx));
    for r in [&th.result, &ph.result, &alpha, &ncr] {
        csv.push_str(&format!(
            "{:?},{:.9e},{:.9e},{},{}\n",
            r.kind,
            r.value,
            r.uncertainty,
            r.inputs_digest,
            r.flags.join(";")
        ));
        println!(
            "{:?}: {:.6e} +- {:.2e} {}",
            r.kind,
            r.value,
            r.uncertainty,
            r.flags.join(" ")
        );
    }
    println!(
        "g0/2pi = {:.4} +- {:.4} Hz",
        crate::model::to_hz(th.g0),
        crate::model::to_hz(th.g0_sigma)
    );
    write(&cli.out.join("calibration.csv"), &csv)?;
    Ok(0)
}

struct Row {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check_row(name: &'static str, r: Result<(bool, String)>) -> Row {
    match r {
        Ok((pass, detail)) => Row { name, pass, detail },
        Err(e) => Row {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn cmd_validate(ctx: &Context) -> Result<i32> {
    let cfg = &ctx.cfg;
    let eff = cfg.mechanics();
    let bae_params = params_for_nc(&ctx.params, cfg.bae.n_c)?;
    let bae = cfg.bae_scheme();
    let dtt_params = params_for_nc(&ctx.params, cfg.dtt.n_c)?;
    let dtt = cfg.dtt_scheme();
    let x2 = derive_xzp(&bae_params).powi(2);
    let grid = ctx.grid(eff.gamma_m);
    let mask = ctx.bae_mask();
    let with = |b: Backend| Context {
        backend: b,
        ..ctx.clone()
    };
    let (cf, fl) = (with(Backend::ClosedForm), with(Backend::Floquet));

    let mut rows = Vec::new();
    rows.push(check_row(
        "floquet convergence (BAE X2)",
        floquet::convergence_report(
            &bae_params,
            &eff,
            &bae,
            &grid,
            Observable::Quadrature(std::f64::consts::FRAC_PI_2),
            &ctx.floquet,
        )
        .map(|r| (r.converged, r.to_text())),
    ));
    rows.push(check_row(
        "floquet vs closed form: BAE quadratures",
        (|| {
            let mut worst = 0.0f64;
            for phi in [0.0, std::f64::consts::FRAC_PI_2] {
                let a = protocols::measure_quadrature(&cf, &bae_params, &eff, &bae, phi, &mask, 0)?;
                let b = protocols::measure_quadrature(&fl, &bae_params, &eff, &bae, phi, &mask, 0)?;
                worst = worst.max(rel(b.variance_xzp2, a.variance_xzp2));
            }
            Ok((worst < 0.01, format!("max relative difference {worst:.2e}")))
        })(),
    ));
    rows.push(check_row(
        "suppression ratio X1/X2 back-action",
        (|| {
            let thermal = 1.0 + 2.0 * eff.n_m_t;
            let b1 =
                protocols::measure_quadrature(&fl, &bae_params, &eff, &bae, 0.0, &mask, 0)?.variance_xzp2 - thermal;
            let b2 =
                protocols::measure_quadrature(&fl, &bae_params, &eff, &bae, std::f64::consts::FRAC_PI_2, &mask, 0)?
                    .variance_xzp2
                    - thermal;
            let target = spectra::bad_cavity_factor(&bae_params);
            let r = b1 / b2;
            Ok((
                rel(r, target) < 0.05,
                format!("1/{:.1} vs 1/{:.1}", 1.0 / r, 1.0 / target),
            ))
        })(),
    ));
    rows.push(check_row(
        "floquet vs closed form: two-tone occupancy",
        (|| {
            let a = protocols::measure_dtt(&cf, &dtt_params, &eff, &dtt, 0)?;
            let b = protocols::measure_dtt(&fl, &dtt_params, &eff, &dtt, 0)?;
            Ok((
                rel(b.n_bar, a.n_bar) < 0.01,
                format!("{:.3} vs {:.3}", b.n_bar, a.n_bar),
            ))
        })(),
    ));
    rows.push(check_row(
        "stochastic vs closed form: BAE variances",
        (|| {
            let base = ctx.ensemble(&bae_params, &eff, &bae, ctx.seed)?;
            let ecfg = EnsembleConfig {
                n_traj: 16,
                duration: 1.0,
                ..base
            };
            let ens = stochastic::integrate(&bae_params, &eff, &bae, &ecfg)?;
            let v = stochastic::quadrature_variances(&ens);
            let b = spectra::bae_budget(&bae_params, &eff, &bae, &cfg.model)?;
            let mut ok = true;
            let mut detail = Vec::new();
            for (k, model) in [(0usize, 1.0 + 2.0 * b.n_x1()), (1, 1.0 + 2.0 * b.n_x2())] {
                let xs: Vec<f64> = v.iter().map(|p| if k == 0 { p.0 / x2 } else { p.1 / x2 }).collect();
                let (m, se) = stochastic::mean_stderr(&xs);
                ok &= (m - model).abs() <= 3.0 * se;
                detail.push(format!("X{}: {m:.2} +- {se:.2} vs {model:.2}", k + 1));
            }
            Ok((ok, detail.join("; ")))
        })(),
    ));
    rows.push(check_row(
        "determinism",
        (|| {
            let a = simulate_spectrum(&cf, &bae_params, &eff, &bae, Target::Quadrature(0.0), &grid, 1)?;
            let b = simulate_spectrum(&cf, &bae_params, &eff, &bae, Target::Quadrature(0.0), &grid, 2)?;
            let ecfg = EnsembleConfig {
                n_traj: 2,
                duration: 0.05,
                ..ctx.ensemble(&bae_params, &eff, &bae, ctx.seed)?
            };
            let s1 = stochastic::integrate(&bae_params, &eff, &bae, &ecfg)?;
            let s2 = stochastic::integrate(&bae_params, &eff, &bae, &ecfg)?;
            let same = a.values == b.values && s1.b == s2.b && s1.d == s2.d;
            Ok((
                same,
                "closed form seed-independent; stochastic reproducible per seed".into(),
            ))
        })(),
    ));
    rows.push(check_row(
        "vacuum output noise",
        (|| {
            let cold = ctx.params.modified(|d| {
                d.g0 = 0.0;
                d.n_c_bath = Default::default();
            })?;
            let g = uniform_grid(2.0 * cold.kappa(), 41);
            let s = floquet::cavity_output_spectrum(
                &cold,
                &eff,
                &DriveScheme::bae(0.0),
                &g,
                floquet::Ordering::Symmetrized,
                &ctx.floquet,
            )?;
            let worst = s.values.iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
            Ok((worst < 1e-9, format!("max |S - 1/2| = {worst:.1e}")))
        })(),
    ));
    rows.push(check_row(
        "readout chain round trip",
        (|| {
            let chain = cfg.readout(&ctx.params)?;
            let de = 9.2;
            let n_c = chain.n_c_from_delta_eta(&ctx.params, de);
            let p = params_for_nc(&ctx.params, n_c)?;
            let back = chain.delta_eta(&p);
            Ok((rel(back, de) < 1e-9, format!("{back:.6} vs {de}")))
        })(),
    ));
    rows.push(check_row(
        "balanced two-tone damping",
        (|| {
            let r = protocols::tone_balance(
                &dtt_params,
                &eff,
                hz(cfg.dtt.delta_hz),
                cfg.dtt.n_p_per_tone,
                cfg.dtt.injected_imbalance,
                cfg.dtt.balance_granularity_db,
                hz(cfg.dtt.balance_tolerance_hz),
                100,
                Backend::Floquet,
                &ctx.floquet,
            )?;
            Ok((true, format!("{} iterations, ratio {:.4} dB", r.iterations, r.ratio_db)))
        })(),
    ));

    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut failed = 0;
    for r in &rows {
        println!(
            "{:<width$}  {}  {}",
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
        failed += usize::from(!r.pass);
    }
    println!("{} checks, {} failed", rows.len(), failed);
    Ok(if failed > 0 { 1 } else { 0 })
}
