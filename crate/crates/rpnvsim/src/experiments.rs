//! The named experiments. Each returns a [`Bundle`]; sweep points run on the
//! supplied rayon pool and are collected in grid order, so results do not
//! depend on the worker count.

use std::f64::consts::{FRAC_PI_2, PI};

use clap::ValueEnum;
use rayon::prelude::*;
use rpnv_core::analytics::{
    analytic_optimum, analytic_sensitivity_curve, analytic_signal, analytic_signal_general, keff_for, keff_point,
    nuclear_configuration_rates, numeric_sensitivity_with, relative_modulation, AnalyticParams, RateFit,
};
use rpnv_core::geometry::{transverse_component, FieldVector, Frame};
use rpnv_core::model::{ModelParams, Variant};
use rpnv_core::montecarlo::{closed_form, early_fraction, simulate_events, summarize, RateComponent, ShotConfig};
use rpnv_core::propagate::TimeGrid;
use rpnv_core::pulses::{effective_hamiltonian_error, log_log_slope, log_space, nv_hamiltonians, sequence_deviation};
use rpnv_core::units::{mhz_to_rate, mt_to_tesla, nm_to_m, rate_to_mhz, s_to_us, sensitivity_to_khz, us_to_s};
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{Bundle, Cell, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Signal,
    Sensitivity,
    KeffMap,
    KeffPhi,
    NoiseSweep,
    Relaxation,
    NucleusVariant,
    DepthSweep,
    DipolarSweep,
    EfieldPermittivity,
    Pulses,
    Montecarlo,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::Signal,
        Experiment::Sensitivity,
        Experiment::KeffMap,
        Experiment::KeffPhi,
        Experiment::NoiseSweep,
        Experiment::Relaxation,
        Experiment::NucleusVariant,
        Experiment::DepthSweep,
        Experiment::DipolarSweep,
        Experiment::EfieldPermittivity,
        Experiment::Pulses,
        Experiment::Montecarlo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Signal => "signal",
            Experiment::Sensitivity => "sensitivity",
            Experiment::KeffMap => "keff-map",
            Experiment::KeffPhi => "keff-phi",
            Experiment::NoiseSweep => "noise-sweep",
            Experiment::Relaxation => "relaxation",
            Experiment::NucleusVariant => "nucleus-variant",
            Experiment::DepthSweep => "depth-sweep",
            Experiment::DipolarSweep => "dipolar-sweep",
            Experiment::EfieldPermittivity => "efield-permittivity",
            Experiment::Pulses => "pulses",
            Experiment::Montecarlo => "montecarlo",
        }
    }
}

/// Validates `config` and runs `experiment` on `pool`.
pub fn run(experiment: Experiment, config: &Config, pool: &rayon::ThreadPool) -> Result<Bundle, CliError> {
    config.validate()?;
    let params = config.model_params()?;
    let ctx = Ctx { config, params };
    pool.install(|| match experiment {
        Experiment::Signal => signal(&ctx),
        Experiment::Sensitivity => sensitivity(&ctx),
        Experiment::KeffMap => keff_map(&ctx),
        Experiment::KeffPhi => keff_phi(&ctx),
        Experiment::NoiseSweep => noise_sweep(&ctx),
        Experiment::Relaxation => relaxation(&ctx),
        Experiment::NucleusVariant => nucleus_variant(&ctx),
        Experiment::DepthSweep => depth_sweep(&ctx),
        Experiment::DipolarSweep => dipolar_sweep(&ctx),
        Experiment::EfieldPermittivity => efield_permittivity(&ctx),
        Experiment::Pulses => pulses(&ctx),
        Experiment::Montecarlo => montecarlo(&ctx),
    })
}

struct Ctx<'a> {
    config: &'a Config,
    params: ModelParams,
}

impl Ctx<'_> {
    fn keff(&self, params: &ModelParams) -> Result<RateFit, CliError> {
        Ok(keff_for(params, &self.config.keff_grid()?)?)
    }

    /// Rate for the reduced-model sensitivity: the configured override or the fitted k_eff.
    fn sensitivity_rate(&self, params: &ModelParams) -> Result<(f64, &'static str), CliError> {
        match self.config.experiment.sensitivity.k_mhz {
            Some(k) => Ok((mhz_to_rate(k), "config")),
            None => Ok((self.keff(params)?.k_eff, "fitted k_eff")),
        }
    }

    fn optimum(&self, params: &ModelParams, k: f64) -> Result<Optimum, CliError> {
        let s = &self.config.experiment.sensitivity;
        let curve = numeric_sensitivity_with(params, k, s.n_points, s.dk_rel)?;
        let (t_op, eta_op) = curve.optimum()?;
        let omega = params.rabi_frequency()?;
        let analytic = AnalyticParams::new(omega, k, params.rates.gamma)?;
        let acurve = analytic_sensitivity_curve(&analytic, &curve.t);
        let (t_op_a, eta_op_a) = analytic_optimum(&analytic, &acurve).unwrap_or((f64::NAN, f64::NAN));
        Ok(Optimum { t: curve.t, eta: curve.eta, eta_analytic: acurve.eta, t_op, eta_op, t_op_a, eta_op_a })
    }
}

struct Optimum {
    t: Vec<f64>,
    eta: Vec<f64>,
    eta_analytic: Vec<f64>,
    t_op: f64,
    eta_op: f64,
    t_op_a: f64,
    eta_op_a: f64,
}

fn khz(eta: f64) -> f64 {
    sensitivity_to_khz(eta)
}

fn mv_per_m(e: f64) -> f64 {
    e * 1e-6
}

fn phi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

fn theta_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![FRAC_PI_2];
    }
    (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect()
}

fn sensitivity_table(o: &Optimum) -> Table {
    let mut t = Table::new("sensitivity", &["T_us", "eta_numeric_kHz_per_sqrtHz", "eta_analytic_kHz_per_sqrtHz"]);
    for i in 0..o.t.len() {
        t.push(vec![s_to_us(o.t[i]).into(), khz(o.eta[i]).into(), khz(o.eta_analytic[i]).into()]);
    }
    t
}

/// k_eff(φ) at fixed θ; failed points become NaN and are reported.
fn keff_curve(ctx: &Ctx, params: &ModelParams, theta: f64, phis: &[f64], bundle: &mut Bundle, tag: &str) -> Result<Vec<f64>, CliError> {
    let grid = ctx.config.keff_grid()?;
    let b0 = params.b_field.magnitude();
    let fits: Vec<_> = phis.par_iter().map(|&phi| keff_point(params, b0, theta, phi, &grid)).collect();
    Ok(fits
        .into_iter()
        .zip(phis)
        .map(|(f, phi)| match f {
            Ok(f) => f.k_eff,
            Err(e) => {
                bundle.failures.push(format!("{tag} phi={phi}: {e}"));
                f64::NAN
            }
        })
        .collect())
}

fn finite_modulation(v: &[f64]) -> f64 {
    let ok: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if ok.is_empty() {
        f64::NAN
    } else {
        relative_modulation(&ok)
    }
}

fn signal(ctx: &Ctx) -> Result<Bundle, CliError> {
    let cfg = &ctx.config.experiment;
    let p = &ctx.params;
    let mut b = Bundle::new("signal");
    let fit = ctx.keff(p)?;
    let omega = p.rabi_frequency()?;
    let grid = TimeGrid::new(0.0, us_to_s(cfg.signal.t_max_us), cfg.signal.n_points)?;
    let model = p.build(Variant::Full)?;
    let trace = model.signal(&grid, &ctx.config.solver())?;
    let ap = AnalyticParams::new(omega, fit.k_eff, p.rates.gamma)?;
    let mut t = Table::new(
        "signal",
        &["t_us", "P_numeric", "P_analytic", "P_analytic_general", "P_E", "P_G", "P_E_analytic", "P_G_analytic", "pop_E"],
    );
    let (mut dev, mut dev_general): (f64, f64) = (0.0, 0.0);
    for i in 0..trace.times.len() {
        let tt = trace.times[i];
        let a = analytic_signal(&ap, tt);
        let g = analytic_signal_general(&ap, tt).map(|g| g.p).unwrap_or(f64::NAN);
        dev = dev.max((trace.p[i] - a.p).abs());
        dev_general = dev_general.max((trace.p[i] - g).abs());
        let pe = trace.p_branch_e[i];
        t.push(vec![
            s_to_us(tt).into(),
            trace.p[i].into(),
            a.p.into(),
            g.into(),
            pe.into(),
            (trace.p[i] - pe).into(),
            a.p_e.into(),
            a.p_g.into(),
            trace.p_e[i].into(),
        ]);
    }
    b.tables.push(t);
    b.scalar("k_eff_MHz", rate_to_mhz(fit.k_eff));
    b.scalar("E_perp_MV_per_m", mv_per_m(p.e_perp()?));
    b.scalar("omega_rad_per_s", omega);
    b.scalar("half_period_us", s_to_us(PI / omega));
    b.scalar("max_abs_dev_analytic", dev);
    b.scalar("max_abs_dev_analytic_general", dev_general);
    b.scalar("method", trace.method.as_str());
    b.scalar("register_dim", model.register.total_dim());
    Ok(b)
}

fn sensitivity(ctx: &Ctx) -> Result<Bundle, CliError> {
    let p = &ctx.params;
    let mut b = Bundle::new("sensitivity");
    let (k, source) = ctx.sensitivity_rate(p)?;
    let o = ctx.optimum(p, k)?;
    b.tables.push(sensitivity_table(&o));
    b.scalar("eta_op_kHz_per_sqrtHz", khz(o.eta_op));
    b.scalar("T_op_us", s_to_us(o.t_op));
    b.scalar("eta_op_analytic_kHz_per_sqrtHz", khz(o.eta_op_a));
    b.scalar("T_op_analytic_us", s_to_us(o.t_op_a));
    b.scalar("k_MHz", rate_to_mhz(k));
    b.scalar("k_source", source);
    b.scalar("gamma_MHz", rate_to_mhz(p.rates.gamma));
    b.scalar("E_perp_MV_per_m", mv_per_m(p.e_perp()?));
    Ok(b)
}

fn keff_map(ctx: &Ctx) -> Result<Bundle, CliError> {
    let cfg = &ctx.config.experiment.keff_map;
    let p = &ctx.params;
    let mut b = Bundle::new("keff-map");
    let grid = ctx.config.keff_grid()?;
    let b0 = p.b_field.magnitude();
    let cells: Vec<(f64, f64)> = theta_grid(cfg.n_theta).into_iter().flat_map(|th| phi_grid(cfg.n_phi).into_iter().map(move |ph| (th, ph))).collect();
    let fits: Vec<_> = cells.par_iter().map(|&(th, ph)| keff_point(p, b0, th, ph, &grid)).collect();
    let mut t = Table::new("keff_map", &["theta_rad", "phi_rad", "k_eff_MHz", "residual", "status"]);
    let mut values = Vec::new();
    for ((th, ph), f) in cells.iter().zip(fits) {
        match f {
            Ok(f) => {
                values.push(f.k_eff);
                t.push(vec![(*th).into(), (*ph).into(), rate_to_mhz(f.k_eff).into(), f.residual.into(), "ok".into()]);
            }
            Err(e) => {
                b.failures.push(format!("theta={th} phi={ph}: {e}"));
                t.push(vec![(*th).into(), (*ph).into(), f64::NAN.into(), f64::NAN.into(), e.to_string().into()]);
            }
        }
    }
    b.tables.push(t);
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    b.scalar("b0_mT", b0 * 1e3);
    b.scalar("k_eff_mean_MHz", rate_to_mhz(mean));
    b.scalar("k_eff_min_MHz", rate_to_mhz(values.iter().cloned().fold(f64::INFINITY, f64::min)));
    b.scalar("k_eff_max_MHz", rate_to_mhz(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)));
    b.scalar("relative_modulation", finite_modulation(&values));
    Ok(b)
}

fn keff_phi(ctx: &Ctx) -> Result<Bundle, CliError> {
    let cfg = &ctx.config.experiment.keff_phi;
    let p = &ctx.params;
    let mut b = Bundle::new("keff-phi");
    let phis = phi_grid(cfg.n_phi);
    let k = keff_curve(ctx, p, cfg.theta_rad, &phis, &mut b, "keff-phi")?;
    let mut t = Table::new("keff_phi", &["phi_rad", "k_eff_MHz"]);
    for (ph, k) in phis.iter().zip(&k) {
        t.push(vec![(*ph).into(), rate_to_mhz(*k).into()]);
    }
    b.tables.push(t);
    b.scalar("theta_rad", cfg.theta_rad);
    b.scalar("relaxation_MHz", rate_to_mhz(p.rates.relaxation));
    b.scalar("relative_modulation", finite_modulation(&k));
    Ok(b)
}

fn noise_sweep(ctx: &Ctx) -> Result<Bundle, CliError> {
    let cfg = &ctx.config.experiment.noise_sweep;
    let p = &ctx.params;
    let mut b = Bundle::new("noise-sweep");
    let (k, source) = ctx.sensitivity_rate(p)?;
    let results: Vec<_> = cfg
        .gamma_mhz
        .par_iter()
        .map(|&g| {
            let mut q = p.clone();
            q.rates.gamma = mhz_to_rate(g);
            ctx.optimum(&q, k)
        })
        .collect();
    let mut t = Table::new(
        "noise_sweep",
        &["gamma_MHz", "eta_op_kHz_per_sqrtHz", "T_op_us", "eta_op_analytic_kHz_per_sqrtHz", "T_op_analytic_us", "status"],
    );
    let (mut t_ops, mut etas) = (Vec::new(), Vec::new());
    for (g, r) in cfg.gamma_mhz.iter().zip(results) {
        match r {
            Ok(o) => {
                t_ops.push(o.t_op);
                etas.push(o.eta_op);
                t.push(vec![(*g).into(), khz(o.eta_op).into(), s_to_us(o.t_op).into(), khz(o.eta_op_a).into(), s_to_us(o.t_op_a).into(), "ok".into()]);
            }
            Err(e) => {
                b.failures.push(format!("gamma={g} MHz: {e}"));
                t.push(vec![(*g).into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), e.to_string().into()]);
            }
        }
    }
    b.tables.push(t);
    let mean_t = t_ops.iter().sum::<f64>() / t_ops.len().max(1) as f64;
    let spread = t_ops.iter().map(|x| (x - mean_t).abs()).fold(0.0, f64::max) / mean_t;
    b.scalar("k_MHz", rate_to_mhz(k));
    b.scalar("k_source", source);
    b.scalar("T_op_max_rel_deviation", spread);
    b.scalar("eta_op_monotone_in_gamma", etas.windows(2).all(|w| w[1] >= w[0]));
    Ok(b)
}

fn relaxation(ctx: &Ctx) -> Result<Bundle, CliError> {
    let cfg = &ctx.config.experiment.relaxation;
    let theta = ctx.config.experiment.keff_phi.theta_rad;
    let base = ctx.params.clone();
    let mut relaxed = base.clone();
    relaxed.rates.relaxation = mhz_to_rate(cfg.relaxation_mhz);
    let mut b = Bundle::new("relaxation");
    let phis = phi_grid(cfg.n_phi);
    let k0 = keff_curve(ctx, &base, theta, &phis, &mut b, "no relaxation")?;
    let k1 = keff_curve(ctx, &relaxed, theta, &phis, &mut b, "relaxation")?;
    let mut t = Table::new("keff_phi", &["phi_rad", "k_eff_MHz", "k_eff_relaxation_MHz"]);
    for i in 0..phis.len() {
        t.push(vec![phis[i].into(), rate_to_mhz(k0[i]).into(), rate_to_mhz(k1[i]).into()]);
    }
    b.tables.push(t);
    let (k, source) = ctx.sensitivity_rate(&relaxed)?;
    let o = ctx.optimum(&relaxed, k)?;
    b.tables.push(sensitivity_table(&o));
    b.scalar("relaxation_MHz", cfg.relaxation_mhz);
    b.scalar("relative_modulation", finite_modulation(&k0));
    b.scalar("relative_modulation_relaxation", finite_modulation(&k1));
    b.scalar("k_MHz", rate_to_mhz(k));
    b.scalar("k_source", source);
    b.scalar("eta_op_kHz_per_sqrtHz", khz(o.eta_op));
    b.scalar("T_op_us", s_to_us(o.t_op));
    Ok(b)
}

fn nucleus_variant(ctx: &Ctx) -> Result<Bundle, CliError> {
    let cfg = &ctx.config.experiment.nucleus_variant;
    let p = &ctx.params;
    let mut b = Bundle::new("nucleus-variant");
    let phis = phi_grid(cfg.n_phi);
    let k_phi = keff_curve(ctx, p, ctx.config.experiment.keff_phi.theta_rad, &phis, &mut b, "nucleus-variant")?;
    let mut t = Table::new("keff_phi", &["phi_rad", "k_eff_MHz"]);
    for (ph, k) in phis.iter().zip(&k_phi) {
        t.push(vec![(*ph).into(), rate_to_mhz(*k).into()]);
    }
    b.tables.push(t);
    let (k, source) = ctx.sensitivity_rate(p)?;
    let o = ctx.optimum(p, k)?;
    b.tables.push(sensitivity_table(&o));
    let labels: Vec<&str> = p.rp.hyperfines.iter().map(|h| h.nucleus.as_str()).collect();
    b.scalar("nuclei", labels.join("+"));
    b.scalar("relative_modulation", finite_modulation(&k_phi));
    b.scalar("k_MHz", rate_to_mhz(k));
    b.scalar("k_source", source);
    b.scalar("eta_op_kHz_per_sqrtHz", khz(o.eta_op));
    b.scalar("T_op_us", s_to_us(o.t_op));
    match (labels.as_slice(), labels.first().and_then(|l| cfg.reference_eta_op.get(*l))) {
        ([_], Some(&r)) => {
            b.scalar("reference_eta_op_kHz_per_sqrtHz", r);
            b.scalar("reference_rel_deviation", (khz(o.eta_op) - r) / r);
        }
        _ => b.scalar("reference_eta_op_kHz_per_sqrtHz", serde_json::Value::Null),
    }
    Ok(b)
}

fn depth_sweep(ctx: &Ctx) -> Result<Bundle, CliError> {
    let cfg = &ctx.config.experiment.depth_sweep;
    let p = &ctx.params;
    let mut b = Bundle::new("depth-sweep");
    let (k, source) = ctx.sensitivity_rate(p)?;
    let results: Vec<_> = cfg
        .d1_nm
        .par_iter()
        .map(|&d1| {
            let mut q = p.clone();
            q.geometry.d1 = nm_to_m(d1);
            let e = q.e_perp()?;
            let o = ctx.optimum(&q, k)?;
            Ok::<_, CliError>((e, o))
        })
        .collect();
    let mut t = Table::new(
        "depth_sweep",
        &["d1_nm", "distance_nm", "E_perp_MV_per_m", "eta_op_kHz_per_sqrtHz", "T_op_us", "eta_op_analytic_kHz_per_sqrtHz", "T_op_analytic_us", "status"],
    );
    for (d1, r) in cfg.d1_nm.iter().zip(results) {
        let dist = d1.hypot(p.geometry.d3 * 1e9);
        match r {
            Ok((e, o)) => t.push(vec![
                (*d1).into(),
                dist.into(),
                mv_per_m(e).into(),
                khz(o.eta_op).into(),
                s_to_us(o.t_op).into(),
                khz(o.eta_op_a).into(),
                s_to_us(o.t_op_a).into(),
                "ok".into(),
            ]),
            Err(e) => {
                b.failures.push(format!("d1={d1} nm: {e}"));
                let nan = || Cell::F(f64::NAN);
                t.push(vec![(*d1).into(), dist.into(), nan(), nan(), nan(), nan(), nan(), e.to_string().into()]);
            }
        }
    }
    b.tables.push(t);
    b.scalar("k_MHz", rate_to_mhz(k));
    b.scalar("k_source", source);
    Ok(b)
}

fn dipolar_sweep(ctx: &Ctx) -> Result<Bundle, CliError> {
    let cfg = &ctx.config.experiment.dipolar_sweep;
    let p = &ctx.params;
    let mut b = Bundle::new("dipolar-sweep");
    let results: Vec<_> = cfg
        .d1_nm
        .par_iter()
        .map(|&d1| {
            let mut q = p.clone();
            q.geometry.d1 = nm_to_m(d1);
            q.dipolar = false;
            let plain = ctx.keff(&q)?.k_eff;
            q.dipolar = true;
            let coupled = ctx.keff(&q)?.k_eff;
            Ok::<_, CliError>((plain, coupled))
        })
        .collect();
    let mut t = Table::new("dipolar_sweep", &["d1_nm", "k_eff_MHz", "k_eff_dipolar_MHz", "relative_change", "status"]);
    let mut changes = Vec::new();
    for (d1, r) in cfg.d1_nm.iter().zip(results) {
        match r {
            Ok((a, c)) => {
                let er = (c - a) / a;
                changes.push(er);
                t.push(vec![(*d1).into(), rate_to_mhz(a).into(), rate_to_mhz(c).into(), er.into(), "ok".into()]);
            }
            Err(e) => {
                b.failures.push(format!("d1={d1} nm: {e}"));
                t.push(vec![(*d1).into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), e.to_string().into()]);
            }
        }
    }
    b.tables.push(t);
    b.scalar("max_abs_relative_change", changes.iter().map(|c| c.abs()).fold(0.0, f64::max));
    b.scalar("relative_change_first_depth", changes.first().copied().unwrap_or(f64::NAN));
    Ok(b)
}

fn efield_permittivity(ctx: &Ctx) -> Result<Bundle, CliError> {
    let cfg = &ctx.config.experiment.efield_permittivity;
    let p = &ctx.params;
    let mut b = Bundle::new("efield-permittivity");
    let mut t = Table::new("efield", &["eps_r1", "E_perp_MV_per_m", "E_x_MV_per_m", "E_y_MV_per_m", "E_z_MV_per_m", "omega_rad_per_s"]);
    let mut e_perp = Vec::new();
    for &eps in &cfg.eps_r1 {
        let mut q = p.clone();
        q.geometry.eps_r1 = eps;
        q.e_field = None;
        let e = q.e_field_nv()?;
        let (perp, _) = transverse_component(e);
        e_perp.push(perp);
        t.push(vec![
            eps.into(),
            mv_per_m(perp).into(),
            mv_per_m(e.v.x).into(),
            mv_per_m(e.v.y).into(),
            mv_per_m(e.v.z).into(),
            q.nv.rabi_frequency(perp).into(),
        ]);
    }
    b.tables.push(t);
    let mut q = p.clone();
    q.e_field = None;
    b.scalar("E_perp_MV_per_m", mv_per_m(q.e_perp()?));
    b.scalar("dipole_azimuth_rad", p.geometry.dipole_azimuth);
    b.scalar("monotone_decreasing", e_perp.windows(2).all(|w| w[1] < w[0]));
    Ok(b)
}

fn pulses(ctx: &Ctx) -> Result<Bundle, CliError> {
    let cfg = &ctx.config.experiment.pulses;
    let p = &ctx.params;
    let mut b = Bundle::new("pulses");
    let e = p.e_field_nv()?;
    let phi = ctx.config.model.b_field.phi_rad;
    let b_perp = FieldVector::spherical(mt_to_tesla(cfg.b_perp_mt), FRAC_PI_2, phi, Frame::Nv);
    let (h, h_omega) = nv_hamiltonians(&p.nv, b_perp, e);
    let taus = log_space(cfg.tau_min_ns * 1e-9, cfg.tau_max_ns * 1e-9, cfg.n_points);
    let mut t = Table::new("pulses", &["tau_ns", "deviation", "heff_error_rad_per_s"]);
    let mut dev = Vec::new();
    let mut heff = Vec::new();
    for &tau in &taus {
        let d = sequence_deviation(&h, &h_omega, tau)?;
        let err = effective_hamiltonian_error(&h, &h_omega, tau).unwrap_or(f64::NAN);
        dev.push(d);
        heff.push(err);
        t.push(vec![(tau * 1e9).into(), d.into(), err.into()]);
    }
    b.tables.push(t);
    let slope_in = |lo: f64, hi: f64, y: &[f64]| {
        let (x, y): (Vec<f64>, Vec<f64>) = taus.iter().zip(y).filter(|(t, v)| **t >= lo * (1.0 - 1e-9) && **t <= hi * (1.0 + 1e-9) && v.is_finite() && **v > 0.0).map(|(t, v)| (*t, *v)).unzip();
        if x.len() >= 2 {
            log_log_slope(&x, &y)
        } else {
            f64::NAN
        }
    };
    b.scalar("deviation_slope_0p1_to_1ns", slope_in(0.1e-9, 1e-9, &dev));
    b.scalar("deviation_slope_1_to_10ps", slope_in(1e-12, 10e-12, &dev));
    b.scalar("heff_error_slope_1_to_10ps", slope_in(1e-12, 10e-12, &heff));
    let fixed_tau = 1e-12;
    let fields = log_space(0.01, 1.0, 9);
    let mut tb = Table::new("pulses_field", &["b_perp_mT", "heff_error_rad_per_s"]);
    let mut errs = Vec::new();
    for &bm in &fields {
        let bp = FieldVector::spherical(mt_to_tesla(bm), FRAC_PI_2, phi, Frame::Nv);
        let (h, h_omega) = nv_hamiltonians(&p.nv, bp, e);
        let err = effective_hamiltonian_error(&h, &h_omega, fixed_tau)?;
        errs.push(err);
        tb.push(vec![bm.into(), err.into()]);
    }
    b.tables.push(tb);
    b.scalar("heff_error_field_slope", log_log_slope(&fields, &errs));
    b.scalar("field_scan_tau_ps", fixed_tau * 1e12);
    Ok(b)
}

fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn montecarlo(ctx: &Ctx) -> Result<Bundle, CliError> {
    let cfg = &ctx.config.experiment.montecarlo;
    let seed = ctx.config.experiment.seed;
    let p = &ctx.params;
    let mut b = Bundle::new("montecarlo");
    let omega = p.rabi_frequency()?;
    let grid = ctx.config.keff_grid()?;
    let k_eff = keff_for(p, &grid)?.k_eff;
    let (components, source) = match &cfg.components {
        Some(c) => (c.iter().map(|c| RateComponent { weight: c.weight, k: mhz_to_rate(c.k_mhz) }).collect::<Vec<_>>(), "config"),
        None => (
            nuclear_configuration_rates(p, &grid)?.into_iter().map(|(w, f)| RateComponent { weight: w, k: f.k_eff }).collect(),
            "nuclear configurations",
        ),
    };
    let shot = |t_m: f64| ShotConfig { omega, t_m, n_readouts: cfg.n_readouts, components: components.clone() };
    let t_ms: Vec<f64> = if cfg.n_t_m == 1 {
        vec![us_to_s(cfg.t_m_max_us)]
    } else {
        (0..cfg.n_t_m).map(|i| us_to_s(cfg.t_m_min_us + (cfg.t_m_max_us - cfg.t_m_min_us) * i as f64 / (cfg.n_t_m - 1) as f64)).collect()
    };
    let summaries: Vec<_> = t_ms
        .par_iter()
        .enumerate()
        .map(|(j, &t_m)| {
            let c = shot(t_m);
            let ev = simulate_events(&c, derive_seed(seed, j as u64), 0..cfg.n_events)?;
            Ok::<_, CliError>(summarize(&c, &ev)?)
        })
        .collect::<Result<_, _>>()?;
    let ap = AnalyticParams::new(omega, k_eff, 0.0)?;
    let mut t = Table::new(
        "montecarlo_average",
        &["t_m_us", "P_mc", "std_error", "P_closed_form", "P_analytic", "z_score", "early_fraction"],
    );
    let mut max_z: f64 = 0.0;
    for s in &summaries {
        let z = if s.std_error > 0.0 { (s.mean_estimate - s.closed_form) / s.std_error } else { 0.0 };
        max_z = max_z.max(z.abs());
        t.push(vec![
            s_to_us(s.t_m).into(),
            s.mean_estimate.into(),
            s.std_error.into(),
            s.closed_form.into(),
            analytic_signal(&ap, s.t_m).p.into(),
            z.into(),
            s.early_fraction.into(),
        ]);
    }
    b.tables.push(t);

    let t_traj = us_to_s(cfg.trajectory_t_m_us);
    let c = shot(t_traj);
    let events = simulate_events(&c, derive_seed(seed, t_ms.len() as u64), 0..cfg.n_events)?;
    let traj = summarize(&c, &events)?;
    let mut te = Table::new("montecarlo_events", &["event", "t_rec_us", "component", "truth", "estimate", "error_bar"]);
    for (i, e) in events.iter().take(cfg.trajectory_events as usize).enumerate() {
        te.push(vec![i.into(), s_to_us(e.t_rec).into(), e.component.into(), e.truth.into(), e.estimate.into(), e.error_bar.into()]);
    }
    b.tables.push(te);

    b.scalar("omega_rad_per_s", omega);
    b.scalar("k_eff_MHz", rate_to_mhz(k_eff));
    b.scalar("components_source", source);
    b.scalar("components", json!(components.iter().map(|c| json!({"k_MHz": rate_to_mhz(c.k), "weight": c.weight})).collect::<Vec<_>>()));
    b.scalar("n_events", cfg.n_events);
    b.scalar("n_readouts", cfg.n_readouts);
    b.scalar("max_abs_z_score", max_z);
    b.scalar("trajectory_t_m_us", cfg.trajectory_t_m_us);
    b.scalar("early_fraction_observed", traj.early_fraction);
    b.scalar("early_fraction_mixture", early_fraction(&components, t_traj));
    b.scalar("early_fraction_k_eff", 1.0 - (-k_eff * t_traj).exp());
    b.scalar("P_closed_form_at_trajectory_t_m", closed_form(omega, &components, t_traj));
    Ok(b)
}
