//! Closed-form signal models, shot-noise sensitivity, optimum search and
//! effective recombination-rate fits.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{FieldVector, Frame};
use crate::linalg::C64;
use crate::model::{ModelParams, Variant};
use crate::hamiltonian::{CHARGE, ELECTRON_1, ELECTRON_2, NV};
use crate::linalg::CMatrix;
use crate::propagate::{charge_population, Solver, TimeGrid};

/// Ω (rad/s), k and γ (1/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticParams {
    pub omega: f64,
    pub k: f64,
    pub gamma: f64,
}

impl AnalyticParams {
    pub fn new(omega: f64, k: f64, gamma: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidArgument(format!("Rabi frequency must be positive, got {omega}")));
        }
        if !(k.is_finite() && k >= 0.0 && gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidArgument(format!("rates must be >= 0, got k={k}, gamma={gamma}")));
        }
        Ok(Self { omega, k, gamma })
    }
}

/// P(t) split into the charge-separated and recombined branches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticPoint {
    pub p: f64,
    pub p_e: f64,
    pub p_g: f64,
}

/// P^E = [1 + e^{−γt} cos Ωt] e^{−kt}/2, P^G = (1 − e^{−kt})/2.
pub fn analytic_signal(p: &AnalyticParams, t: f64) -> AnalyticPoint {
    let decay = (-p.k * t).exp();
    let p_e = 0.5 * (1.0 + (-p.gamma * t).exp() * (p.omega * t).cos()) * decay;
    let p_g = 0.5 * (1.0 - decay);
    AnalyticPoint { p: p_e + p_g, p_e, p_g }
}

/// ∂P/∂k of [`analytic_signal`].
pub fn analytic_signal_dk(p: &AnalyticParams, t: f64) -> f64 {
    -0.5 * t * (p.omega * t).cos() * (-(p.k + p.gamma) * t).exp()
}

/// Damped frequency Ω' = √(Ω² − γ²), amplitude C = √(1 + (γ/Ω')²) and phase
/// α = atan(γ/Ω') of the dephased oscillation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DephasingConstants {
    pub omega: f64,
    pub c: f64,
    pub alpha: f64,
}

pub fn dephasing_constants(p: &AnalyticParams) -> Result<DephasingConstants> {
    if p.gamma >= p.omega {
        return Err(Error::OutOfRegime(format!(
            "dephasing rate {:e} 1/s is not below the Rabi frequency {:e} rad/s (overdamped)",
            p.gamma, p.omega
        )));
    }
    let omega = (p.omega * p.omega - p.gamma * p.gamma).sqrt();
    let r = p.gamma / omega;
    Ok(DephasingConstants { omega, c: (1.0 + r * r).sqrt(), alpha: r.atan() })
}

/// P^E = [1 + e^{−γt} C cos(Ω't − α)] e^{−kt}/2 and P^G = k ∫₀ᵗ P^E.
pub fn analytic_signal_general(p: &AnalyticParams, t: f64) -> Result<AnalyticPoint> {
    let dc = dephasing_constants(p)?;
    let decay = (-p.k * t).exp();
    let p_e = 0.5 * (1.0 + (-p.gamma * t).exp() * dc.c * (dc.omega * t - dc.alpha).cos()) * decay;
    let z = C64::new(-(p.k + p.gamma), dc.omega);
    let integral = ((z * t).exp() - 1.0) / z;
    let osc = (C64::from_polar(1.0, -dc.alpha) * integral).re;
    let p_g = 0.5 * (1.0 - decay) + 0.5 * p.k * dc.c * osc;
    Ok(AnalyticPoint { p: p_e + p_g, p_e, p_g })
}

/// η(T) = |e^{(γ+k)T} sec(ΩT) √(1 − e^{−2(γ+k)T} cos²ΩT) / √T|, in
/// (1/s)/√Hz.
pub fn eta_analytic(p: &AnalyticParams, t: f64) -> f64 {
    let r = p.gamma + p.k;
    let c = (p.omega * t).cos();
    ((r * t).exp() / c * (1.0 - (-2.0 * r * t).exp() * c * c).sqrt() / t.sqrt()).abs()
}

/// η = √(P(1−P))·√T / |∂P/∂k|.
pub fn sensitivity(p: f64, dp_dk: f64, t: f64) -> Result<f64> {
    if dp_dk.abs() < 1e-18 {
        return Err(Error::DivergentSensitivity(t));
    }
    let var = (p * (1.0 - p)).max(0.0);
    Ok(var.sqrt() * t.sqrt() / dp_dk.abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityCurve {
    pub t: Vec<f64>,
    /// (1/s)/√Hz; +∞ where ∂P/∂k vanishes.
    pub eta: Vec<f64>,
}

impl SensitivityCurve {
    /// (T_op, η_op) over the whole curve.
    pub fn optimum(&self) -> Result<(f64, f64)> {
        find_optimum(&self.t, &self.eta)
    }

    /// (T_op, η_op) over T ≥ `t_min`.
    pub fn optimum_from(&self, t_min: f64) -> Result<(f64, f64)> {
        let start = self.t.iter().position(|&t| t >= t_min).unwrap_or(self.t.len());
        find_optimum(&self.t[start..], &self.eta[start..])
    }
}

/// T ∈ (0, 5/(k+γ)] with `n` points.
pub fn sensitivity_grid(k: f64, gamma: f64, n: usize) -> Result<TimeGrid> {
    let t_max = 5.0 / (k + gamma);
    TimeGrid::new(t_max / n as f64, t_max, n)
}

/// Numeric η(T) from a signal model P(k; T), with a central difference of
/// step `dk` in k.
pub fn sensitivity_curve(times: &[f64], k: f64, dk: f64, mut signal: impl FnMut(f64) -> Result<Vec<f64>>) -> Result<SensitivityCurve> {
    if !(dk > 0.0 && dk < k) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be in (0, k), got {dk}")));
    }
    let p0 = signal(k)?;
    let pp = signal(k + dk)?;
    let pm = signal(k - dk)?;
    if p0.len() != times.len() || pp.len() != times.len() || pm.len() != times.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: p0.len() });
    }
    let eta: Vec<f64> = (0..times.len())
        .map(|i| sensitivity(p0[i], (pp[i] - pm[i]) / (2.0 * dk), times[i]).unwrap_or(f64::INFINITY))
        .collect();
    Ok(SensitivityCurve { t: times.to_vec(), eta })
}

/// Analytic η(T) on a grid.
pub fn analytic_sensitivity_curve(p: &AnalyticParams, times: &[f64]) -> SensitivityCurve {
    let eta = times.iter().map(|&t| eta_analytic(p, t)).map(|e| if e.is_finite() { e } else { f64::INFINITY }).collect();
    SensitivityCurve { t: times.to_vec(), eta }
}

/// Optimum of the closed-form η(T) beyond the first zero of cos ΩT. Below it
/// the closed form tends to √(2(k+γ)) as T → 0, an artifact of the
/// approximate recombined branch (the exact ∂P/∂k vanishes as T³ there).
pub fn analytic_optimum(p: &AnalyticParams, curve: &SensitivityCurve) -> Result<(f64, f64)> {
    curve.optimum_from(core::f64::consts::FRAC_PI_2 / p.omega)
}

/// Grid minimum refined by the vertex of the parabola through it and its
/// neighbours.
pub fn find_optimum(t: &[f64], eta: &[f64]) -> Result<(f64, f64)> {
    if t.len() != eta.len() || t.len() < 3 {
        return Err(Error::InvalidArgument("optimum search needs at least 3 matching points".into()));
    }
    let mut best = None;
    for (i, &e) in eta.iter().enumerate() {
        if e.is_finite() && best.is_none_or(|b: usize| e < eta[b]) {
            best = Some(i);
        }
    }
    let i = best.ok_or(Error::DivergentSensitivity(f64::NAN))?;
    if i == 0 || i + 1 == t.len() {
        return Err(Error::BoundaryOptimum(t[i]));
    }
    let (x0, x1, x2) = (t[i - 1], t[i], t[i + 1]);
    let (y0, y1, y2) = (eta[i - 1], eta[i], eta[i + 1]);
    if !(y0.is_finite() && y2.is_finite()) {
        return Ok((x1, y1));
    }
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a <= 0.0 {
        return Ok((x1, y1));
    }
    let b = d01 - a * (x0 + x1);
    let xv = (-b / (2.0 * a)).clamp(x0, x2);
    let yv = y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1);
    Ok((xv, yv.min(y1)))
}

/// Result of fitting P_E(t) ≈ exp(−k_eff t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub k_eff: f64,
    /// Root-mean-square residual over the window.
    pub residual: f64,
    /// Fit window (start, end), seconds.
    pub window: (f64, f64),
    pub n_points: usize,
}

/// Least-squares fit of exp(−k t) over t ∈ [0, min(3/k_init, t_max)], with
/// k_init from a log-linear regression through the origin.
pub fn fit_keff(times: &[f64], p_e: &[f64]) -> Result<RateFit> {
    if times.len() != p_e.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: p_e.len() });
    }
    let (mut stt, mut sty) = (0.0, 0.0);
    for (&t, &y) in times.iter().zip(p_e) {
        if t > 0.0 && y > 1e-12 && y.is_finite() {
            stt += t * t;
            sty += t * y.ln();
        }
    }
    let k_init = -sty / stt;
    if !(k_init.is_finite() && k_init > 0.0) {
        return Err(Error::FitFailure(format!("trace does not decay (log-linear rate {k_init:e})")));
    }
    let t_max = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let t_end = (3.0 / k_init).min(t_max);
    let pts: Vec<(f64, f64)> = times.iter().zip(p_e).filter(|(t, _)| **t >= 0.0 && **t <= t_end).map(|(t, y)| (*t, *y)).collect();
    if pts.len() < 3 {
        return Err(Error::FitFailure(format!("only {} points in the fit window", pts.len())));
    }
    let mut k = k_init;
    for _ in 0..200 {
        let (mut num, mut den) = (0.0, 0.0);
        for &(t, y) in &pts {
            let f = (-k * t).exp();
            let j = -t * f;
            num += j * (f - y);
            den += j * j;
        }
        if den == 0.0 {
            return Err(Error::FitFailure("degenerate Jacobian".into()));
        }
        let step = num / den;
        let next = k - step;
        let next = if next <= 0.0 { 0.5 * k } else { next };
        let done = (next - k).abs() <= 1e-15 * k;
        k = next;
        if done {
            break;
        }
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::FitFailure(format!("fit diverged (k = {k:e})")));
    }
    let ss: f64 = pts.iter().map(|&(t, y)| ((-k * t).exp() - y).powi(2)).sum();
    Ok(RateFit { k_eff: k, residual: (ss / pts.len() as f64).sqrt(), window: (0.0, t_end), n_points: pts.len() })
}

/// Default trace for k_eff fits: 30 µs at 10 ns resolution.
pub fn keff_grid() -> TimeGrid {
    TimeGrid { t0: 0.0, t1: 30e-6, n_points: 3001 }
}

/// k_eff at one field orientation (θ, φ) of magnitude `b0` (tesla).
///
/// Uses the radical-pair register, which gives P_E(t) exactly unless the
/// NV–radical coupling is switched on.
pub fn keff_point(params: &ModelParams, b0: f64, theta: f64, phi: f64, grid: &TimeGrid) -> Result<RateFit> {
    let p = ModelParams { b_field: FieldVector::spherical(b0, theta, phi, Frame::Nv), ..params.clone() };
    keff_for(&p, grid)
}

/// k_eff of a complete parameter set.
pub fn keff_for(params: &ModelParams, grid: &TimeGrid) -> Result<RateFit> {
    let variant = if params.dipolar { Variant::Full } else { Variant::RadicalPair };
    let model = params.build(variant)?;
    let pe = model.charge_population(grid, &Solver::Dense)?;
    fit_keff(&grid.times(), &pe)
}

/// k_eff for each nuclear basis configuration of the radical pair, with its
/// thermal weight. The weights sum to one.
pub fn nuclear_configuration_rates(params: &ModelParams, grid: &TimeGrid) -> Result<Vec<(f64, RateFit)>> {
    let variant = if params.dipolar { Variant::Full } else { Variant::RadicalPair };
    let model = params.build(variant)?;
    let reg = &model.register;
    let nuclei: Vec<(&str, usize)> = reg
        .sites()
        .iter()
        .filter(|s| ![NV, ELECTRON_1, ELECTRON_2, CHARGE].contains(&s.label.as_str()))
        .map(|s| (s.label.as_str(), s.dim()))
        .collect();
    let total: usize = nuclei.iter().map(|n| n.1).product();
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rest = idx;
        let mut projectors = Vec::with_capacity(nuclei.len());
        for &(_, d) in nuclei.iter().rev() {
            let mut diag = alloc::vec![0.0; d];
            diag[rest % d] = 1.0;
            rest /= d;
            projectors.push(CMatrix::from_real_diag(&diag));
        }
        projectors.reverse();
        let rho = if nuclei.is_empty() {
            model.rho0.clone()
        } else {
            let factors: Vec<(&str, &CMatrix)> = nuclei.iter().zip(&projectors).map(|(n, p)| (n.0, p)).collect();
            let proj = reg.embed_product(&factors)?;
            proj.matmul(&model.rho0).matmul(&proj)
        };
        let weight = rho.trace().re;
        let rho = rho.scale_real(1.0 / weight);
        let pe = charge_population(&model.liouvillian, &rho, grid, reg, &Solver::Dense)?;
        out.push((weight, fit_keff(&grid.times(), &pe)?));
    }
    Ok(out)
}

/// Row-major k_eff(θ_i, φ_j); failed cells carry their error.
pub fn keff_map(params: &ModelParams, b0: f64, thetas: &[f64], phis: &[f64], grid: &TimeGrid) -> Vec<Vec<Result<RateFit>>> {
    thetas.iter().map(|&th| phis.iter().map(|&ph| keff_point(params, b0, th, ph, grid)).collect()).collect()
}

/// Peak-to-peak spread over mean.
pub fn relative_modulation(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max - min) / mean
}

/// P(T) of the NV-only model with a spin-independent rate `k` and the
/// dephasing rate of `params`.
pub fn reduced_signal(params: &ModelParams, k: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    let model = params.build(Variant::NvOnly { k })?;
    Ok(model.signal(grid, &Solver::Dense)?.p)
}

/// Numeric η(T) on T ∈ (0, 5/(k+γ)] (2000 points) with ∂P/∂k from a central
/// difference of step 1e-3·k.
pub fn numeric_sensitivity(params: &ModelParams, k: f64) -> Result<SensitivityCurve> {
    numeric_sensitivity_with(params, k, 2000, 1e-3)
}

/// As [`numeric_sensitivity`] with `n_points` samples and step `dk_rel·k`.
pub fn numeric_sensitivity_with(params: &ModelParams, k: f64, n_points: usize, dk_rel: f64) -> Result<SensitivityCurve> {
    if !(dk_rel > 0.0 && dk_rel < 1.0) {
        return Err(Error::InvalidArgument(format!("relative rate step must be in (0, 1), got {dk_rel}")));
    }
    let grid = sensitivity_grid(k, params.rates.gamma, n_points)?;
    sensitivity_curve(&grid.times(), k, dk_rel * k, |kk| reduced_signal(params, kk, &grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn params(gamma: f64) -> AnalyticParams {
        AnalyticParams::new(2.0 * 2.0 * PI * 0.17 * 3.15e6, 1.425e5, gamma).unwrap()
    }

    #[test]
    fn nuclear_configurations_bracket_the_ensemble_rate() {
        let params = ModelParams::default();
        let grid = keff_grid();
        let conf = nuclear_configuration_rates(&params, &grid).unwrap();
        assert_eq!(conf.len(), 2);
        assert!((conf.iter().map(|c| c.0).sum::<f64>() - 1.0).abs() < 1e-12);
        let k = keff_for(&params, &grid).unwrap().k_eff;
        let lo = conf.iter().map(|c| c.1.k_eff).fold(f64::INFINITY, f64::min);
        let hi = conf.iter().map(|c| c.1.k_eff).fold(0.0, f64::max);
        assert!(lo <= k * 1.001 && k <= hi * 1.001, "{lo} {k} {hi}");
    }

    #[test]
    fn signal_limits() {
        let p = params(0.0);
        assert!((analytic_signal(&p, 0.0).p - 1.0).abs() < 1e-15);
        let t = PI / p.omega;
        let want = 0.5 * (1.0 - (-p.k * t).exp());
        assert!((analytic_signal(&p, t).p - want).abs() < 1e-14);
        assert!((want - 0.0317).abs() < 2e-3, "{want}");
        assert!((analytic_signal(&p, 1e-3).p - 0.5).abs() < 1e-9);
    }

    #[test]
    fn general_reduces_without_dephasing() {
        let p = params(0.0);
        let dc = dephasing_constants(&p).unwrap();
        assert_eq!((dc.c, dc.alpha), (1.0, 0.0));
        for i in 0..50 {
            let t = i as f64 * 0.07e-6;
            let a = analytic_signal(&p, t);
            let g = analytic_signal_general(&p, t).unwrap();
            assert!((a.p_e - g.p_e).abs() < 1e-14);
        }
    }

    #[test]
    fn general_converges_first_order_in_gamma() {
        let base = params(0.0);
        let p = AnalyticParams { gamma: 1e-6 * base.omega, ..base };
        for i in 0..200 {
            let t = i as f64 * 0.02e-6;
            let d = (analytic_signal(&p, t).p_e - analytic_signal_general(&p, t).unwrap().p_e).abs();
            assert!(d <= p.gamma / p.omega, "{d}");
        }
    }

    #[test]
    fn overdamped_is_rejected() {
        let p = AnalyticParams::new(1e6, 1e5, 2e6).unwrap();
        assert!(matches!(analytic_signal_general(&p, 1e-6), Err(Error::OutOfRegime(_))));
        let dc = dephasing_constants(&AnalyticParams::new(1e6, 0.0, 5e5).unwrap()).unwrap();
        assert!(dc.c >= 1.0 && dc.alpha > 0.0 && dc.alpha < PI / 2.0);
    }

    #[test]
    fn general_branch_integral() {
        // P^G = k ∫ P^E, checked by the trapezoid rule.
        let p = AnalyticParams::new(6e6, 3e5, 8e5).unwrap();
        let t_end = 2e-6;
        let n = 20000;
        let h = t_end / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            s += w * analytic_signal_general(&p, i as f64 * h).unwrap().p_e;
        }
        let got = analytic_signal_general(&p, t_end).unwrap().p_g;
        assert!((got - p.k * s * h).abs() < 1e-8);
    }

    #[test]
    fn finite_difference_matches_derivative() {
        let p = params(0.0);
        let dk = 1e-3 * p.k;
        for i in 1..40 {
            let t = i as f64 * 0.05e-6;
            let d = analytic_signal_dk(&p, t);
            if d.abs() < 1e-9 {
                continue;
            }
            let fd = (analytic_signal(&AnalyticParams { k: p.k + dk, ..p }, t).p - analytic_signal(&AnalyticParams { k: p.k - dk, ..p }, t).p) / (2.0 * dk);
            assert!((fd - d).abs() < 1e-4 * d.abs());
        }
    }

    #[test]
    fn analytic_eta_equals_pipeline() {
        for gamma in [0.0, 5e5] {
            let p = params(gamma);
            let times: Vec<f64> = (1..400).map(|i| i as f64 * 5e-9).collect();
            let curve = sensitivity_curve(&times, p.k, 1e-3 * p.k, |k| {
                Ok(times.iter().map(|&t| analytic_signal(&AnalyticParams { k, ..p }, t).p).collect())
            })
            .unwrap();
            for (&t, &e) in times.iter().zip(&curve.eta) {
                let a = eta_analytic(&p, t);
                if a.is_finite() && a < 1e12 {
                    assert!((e - a).abs() < 1e-6 * a, "t={t} {e} vs {a}");
                }
            }
        }
    }

    #[test]
    fn analytic_optimum_near_half_period() {
        let p = params(0.0);
        let grid = sensitivity_grid(p.k, p.gamma, 2000).unwrap();
        let c = analytic_sensitivity_curve(&p, &grid.times());
        let (t_op, eta_op) = analytic_optimum(&p, &c).unwrap();
        assert!((t_op - 0.46e-6).abs() < 0.02e-6, "{t_op}");
        assert!((eta_op / 1e3 - 0.55).abs() < 0.02, "{eta_op}");
        // The closed form's T → 0 branch undercuts the interior optimum for larger γ.
        let q = params(1e6);
        let c = analytic_sensitivity_curve(&q, &sensitivity_grid(q.k, q.gamma, 2000).unwrap().times());
        assert!(matches!(c.optimum(), Err(Error::BoundaryOptimum(_))));
        assert!(analytic_optimum(&q, &c).is_ok());
    }

    #[test]
    fn divergent_and_boundary() {
        assert!(matches!(sensitivity(0.5, 0.0, 1.0), Err(Error::DivergentSensitivity(_))));
        let t = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(find_optimum(&t, &[1.0, 2.0, 3.0, 4.0]), Err(Error::BoundaryOptimum(_))));
        let (x, y) = find_optimum(&t, &[4.0, 1.0, 1.0, 4.0]).unwrap();
        assert!((x - 2.5).abs() < 1e-12 && y <= 1.0);
    }

    #[test]
    fn fit_exact_exponential() {
        let k = 1.425e5;
        let times: Vec<f64> = (0..3001).map(|i| i as f64 * 1e-8).collect();
        let y: Vec<f64> = times.iter().map(|t| (-k * t).exp()).collect();
        let f = fit_keff(&times, &y).unwrap();
        assert!((f.k_eff - k).abs() < 1e-9 * k);
        assert!(f.residual < 1e-12);
        assert!(matches!(fit_keff(&times, &vec![1.0; times.len()]), Err(Error::FitFailure(_))));
    }

    #[test]
    fn fit_is_scale_equivariant() {
        let times: Vec<f64> = (0..2001).map(|i| i as f64 * 1e-8).collect();
        let y = |t: f64| 0.7 * (-1e5 * t).exp() + 0.3 * (-4e5 * t).exp();
        let c = 2.5;
        let a = fit_keff(&times, &times.iter().map(|&t| y(t)).collect::<Vec<_>>()).unwrap();
        let scaled: Vec<f64> = times.iter().map(|t| t * c).collect();
        let b = fit_keff(&scaled, &times.iter().map(|&t| y(t)).collect::<Vec<_>>()).unwrap();
        assert!((a.k_eff / c - b.k_eff).abs() < 1e-9 * b.k_eff);
    }
}
