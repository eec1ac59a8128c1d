//! Experiment configuration in user units (GHz, MHz, mT, MV/m, nm, µs).
//!
//! Every section has defaults, so a config only needs the keys it changes.
//! Unknown keys are rejected.

use std::path::Path;

use rpnv_core::geometry::{FieldVector, Frame, Geometry, Vec3, DEFAULT_DIPOLE_AZIMUTH};
use rpnv_core::hamiltonian::{HyperfineTensor, NvParams, RateParams, RpParams};
use rpnv_core::model::ModelParams;
use rpnv_core::propagate::{KrylovOptions, Solver};
use rpnv_core::spin::Spin;
use rpnv_core::units::{ghz_to_angular, hz_to_angular, mhz_to_rate, mt_to_tesla, mv_per_m_to_v_per_m, nm_to_m, us_to_s};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub model: ModelSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub nv: NvSection,
    pub rates: RatesSection,
    pub geometry: GeometrySection,
    pub b_field: BFieldSection,
    /// Overrides the field computed from `geometry`: (x, y, z) in MV/m, crystal frame.
    pub e_field_mv_per_m: Option<[f64; 3]>,
    pub hyperfines: Vec<HyperfineSection>,
    /// NV–radical point-dipole coupling in the charge-separated state.
    pub dipolar: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            nv: NvSection::default(),
            rates: RatesSection::default(),
            geometry: GeometrySection::default(),
            b_field: BFieldSection::default(),
            e_field_mv_per_m: None,
            hyperfines: vec![HyperfineSection::h6()],
            dipolar: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct NvSection {
    pub d_ghz: f64,
    pub k_par_hz_m_per_v: f64,
    pub k_perp_hz_m_per_v: f64,
    pub gyro_ghz_per_t: f64,
}

impl Default for NvSection {
    fn default() -> Self {
        Self { d_ghz: 2.87, k_par_hz_m_per_v: 0.0035, k_perp_hz_m_per_v: 0.17, gyro_ghz_per_t: 28.024 }
    }
}

/// Rates in MHz, i.e. units of 1e6 s⁻¹.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct RatesSection {
    pub k_s_mhz: f64,
    pub k_t_mhz: f64,
    pub gamma_mhz: f64,
    pub relaxation_mhz: f64,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self { k_s_mhz: 0.02, k_t_mhz: 0.2, gamma_mhz: 0.0, relaxation_mhz: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub d1_nm: f64,
    pub d2_nm: f64,
    pub d3_nm: f64,
    pub eps_r1: f64,
    pub eps_r2: f64,
    pub dipole_azimuth_rad: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self { d1_nm: 5.0, d2_nm: 2.0, d3_nm: 4.0, eps_r1: 1.0, eps_r2: 5.7, dipole_azimuth_rad: DEFAULT_DIPOLE_AZIMUTH }
    }
}

/// B = B₀(sin θ cos φ, sin θ sin φ, cos θ) in the NV frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct BFieldSection {
    pub b0_mt: f64,
    pub theta_rad: f64,
    pub phi_rad: f64,
}

impl Default for BFieldSection {
    fn default() -> Self {
        Self { b0_mt: 0.05, theta_rad: std::f64::consts::FRAC_PI_2, phi_rad: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct HyperfineSection {
    pub nucleus: String,
    /// 0.5 or 1.
    pub nuclear_spin: f64,
    /// Radical electron carrying the nucleus: 1 (anion) or 2 (cation).
    pub electron: usize,
    pub principal_values_mt: [f64; 3],
    /// Rotation R whose columns are the principal axes, row-major.
    pub principal_axes: [[f64; 3]; 3],
}

impl HyperfineSection {
    pub fn h6() -> Self {
        Self {
            nucleus: "H6".into(),
            nuclear_spin: 0.5,
            electron: 1,
            principal_values_mt: [-0.218, -0.202, -0.054],
            principal_axes: [[-0.0362, 0.2937, 0.9552], [0.7948, 0.5879, -0.1507], [-0.6059, 0.7537, -0.2546]],
        }
    }

    pub fn tensor(&self) -> rpnv_core::Result<HyperfineTensor> {
        let r = self.principal_axes;
        let axes = std::array::from_fn(|i| std::array::from_fn(|c| r[c][i]));
        HyperfineTensor::new(&self.nucleus, Spin::new(self.nuclear_spin)?, self.electron, self.principal_values_mt, axes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Dense,
    Krylov,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub seed: u64,
    /// Propagator for the full-register runs.
    pub solver: SolverKind,
    pub krylov_tol: f64,
    pub signal: SignalExp,
    pub sensitivity: SensitivityExp,
    pub keff: KeffExp,
    pub keff_map: KeffMapExp,
    pub keff_phi: KeffPhiExp,
    pub noise_sweep: NoiseSweepExp,
    pub relaxation: RelaxationExp,
    pub nucleus_variant: NucleusVariantExp,
    pub depth_sweep: DepthSweepExp,
    pub dipolar_sweep: DipolarSweepExp,
    pub efield_permittivity: PermittivityExp,
    pub pulses: PulsesExp,
    pub montecarlo: MonteCarloExp,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            solver: SolverKind::Krylov,
            krylov_tol: 1e-10,
            signal: SignalExp::default(),
            sensitivity: SensitivityExp::default(),
            keff: KeffExp::default(),
            keff_map: KeffMapExp::default(),
            keff_phi: KeffPhiExp::default(),
            noise_sweep: NoiseSweepExp::default(),
            relaxation: RelaxationExp::default(),
            nucleus_variant: NucleusVariantExp::default(),
            depth_sweep: DepthSweepExp::default(),
            dipolar_sweep: DipolarSweepExp::default(),
            efield_permittivity: PermittivityExp::default(),
            pulses: PulsesExp::default(),
            montecarlo: MonteCarloExp::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SignalExp {
    pub t_max_us: f64,
    pub n_points: usize,
}

impl Default for SignalExp {
    fn default() -> Self {
        Self { t_max_us: 3.0, n_points: 301 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityExp {
    /// Interrogation times on (0, 5/(k+γ)].
    pub n_points: usize,
    /// Central-difference step relative to k.
    pub dk_rel: f64,
    /// Rate used in the reduced model; the fitted k_eff when absent.
    pub k_mhz: Option<f64>,
}

impl Default for SensitivityExp {
    fn default() -> Self {
        Self { n_points: 2000, dk_rel: 1e-3, k_mhz: None }
    }
}

/// P_E(t) trace for k_eff fits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct KeffExp {
    pub t_max_us: f64,
    pub n_points: usize,
}

impl Default for KeffExp {
    fn default() -> Self {
        Self { t_max_us: 30.0, n_points: 3001 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct KeffMapExp {
    /// θ ∈ [0, π].
    pub n_theta: usize,
    /// φ ∈ [0, 2π).
    pub n_phi: usize,
}

impl Default for KeffMapExp {
    fn default() -> Self {
        Self { n_theta: 19, n_phi: 36 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct KeffPhiExp {
    pub theta_rad: f64,
    pub n_phi: usize,
}

impl Default for KeffPhiExp {
    fn default() -> Self {
        Self { theta_rad: std::f64::consts::FRAC_PI_2, n_phi: 72 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSweepExp {
    pub gamma_mhz: Vec<f64>,
}

impl Default for NoiseSweepExp {
    fn default() -> Self {
        Self { gamma_mhz: vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxationExp {
    pub relaxation_mhz: f64,
    pub n_phi: usize,
}

impl Default for RelaxationExp {
    fn default() -> Self {
        Self { relaxation_mhz: 0.1, n_phi: 36 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct NucleusVariantExp {
    pub n_phi: usize,
    /// Reference η_op (kHz/√Hz) to compare against, keyed by nucleus label.
    pub reference_eta_op: std::collections::BTreeMap<String, f64>,
}

impl Default for NucleusVariantExp {
    fn default() -> Self {
        let reference_eta_op = [("H6".to_string(), 0.54), ("H5".to_string(), 0.563), ("N5".to_string(), 0.436)].into_iter().collect();
        Self { n_phi: 36, reference_eta_op }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct DepthSweepExp {
    pub d1_nm: Vec<f64>,
}

impl Default for DepthSweepExp {
    fn default() -> Self {
        Self { d1_nm: vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct DipolarSweepExp {
    pub d1_nm: Vec<f64>,
}

impl Default for DipolarSweepExp {
    fn default() -> Self {
        Self { d1_nm: vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct PermittivityExp {
    pub eps_r1: Vec<f64>,
}

impl Default for PermittivityExp {
    fn default() -> Self {
        Self { eps_r1: (0..=18).map(|i| 1.0 + 0.5 * i as f64).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct PulsesExp {
    pub tau_min_ns: f64,
    pub tau_max_ns: f64,
    pub n_points: usize,
    /// Transverse field magnitude; its direction follows `model.b_field.phi_rad`.
    pub b_perp_mt: f64,
}

impl Default for PulsesExp {
    fn default() -> Self {
        Self { tau_min_ns: 1e-3, tau_max_ns: 1.0, n_points: 31, b_perp_mt: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RateComponentSection {
    pub k_mhz: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloExp {
    pub t_m_min_us: f64,
    pub t_m_max_us: f64,
    pub n_t_m: usize,
    /// Readouts per event.
    pub n_readouts: u64,
    /// Events per measurement time.
    pub n_events: u64,
    /// One recombination rate per nuclear configuration; fitted from the
    /// model when absent.
    pub components: Option<Vec<RateComponentSection>>,
    /// Measurement time of the per-event table and the event-fraction check.
    pub trajectory_t_m_us: f64,
    /// Rows of the per-event table.
    pub trajectory_events: u64,
}

impl Default for MonteCarloExp {
    fn default() -> Self {
        Self {
            t_m_min_us: 0.0,
            t_m_max_us: 3.0,
            n_t_m: 20,
            n_readouts: 500,
            n_events: 100_000,
            components: None,
            trajectory_t_m_us: 0.7,
            trajectory_events: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: "results".into() }
    }
}

/// A finding from [`Config::diagnostics`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    Error(String),
    Warning(String),
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical JSON of the resolved config (defaults filled in).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`Config::canonical_json`], hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn model_params(&self) -> Result<ModelParams, CliError> {
        let m = &self.model;
        let hyperfines = m
            .hyperfines
            .iter()
            .map(|h| h.tensor().map_err(|e| CliError::Config(format!("model.hyperfines[{}]: {e}", h.nucleus))))
            .collect::<Result<Vec<_>, _>>()?;
        let gyro = ghz_to_angular(m.nv.gyro_ghz_per_t);
        let params = ModelParams {
            nv: NvParams {
                d: ghz_to_angular(m.nv.d_ghz),
                k_par: hz_to_angular(m.nv.k_par_hz_m_per_v),
                k_perp: hz_to_angular(m.nv.k_perp_hz_m_per_v),
                gyro,
            },
            rp: RpParams { hyperfines, gyro },
            rates: RateParams {
                k_s: mhz_to_rate(m.rates.k_s_mhz),
                k_t: mhz_to_rate(m.rates.k_t_mhz),
                gamma: mhz_to_rate(m.rates.gamma_mhz),
                relaxation: mhz_to_rate(m.rates.relaxation_mhz),
            },
            geometry: Geometry {
                d1: nm_to_m(m.geometry.d1_nm),
                d2: nm_to_m(m.geometry.d2_nm),
                d3: nm_to_m(m.geometry.d3_nm),
                eps_r1: m.geometry.eps_r1,
                eps_r2: m.geometry.eps_r2,
                dipole_azimuth: m.geometry.dipole_azimuth_rad,
            },
            b_field: FieldVector::spherical(mt_to_tesla(m.b_field.b0_mt), m.b_field.theta_rad, m.b_field.phi_rad, Frame::Nv),
            e_field: m.e_field_mv_per_m.map(|e| {
                FieldVector::new(Vec3::new(mv_per_m_to_v_per_m(e[0]), mv_per_m_to_v_per_m(e[1]), mv_per_m_to_v_per_m(e[2])), Frame::Lab)
            }),
            dipolar: m.dipolar,
        };
        params.validate().map_err(|e| CliError::Config(format!("model: {e}")))?;
        Ok(params)
    }

    pub fn solver(&self) -> Solver {
        match self.experiment.solver {
            SolverKind::Dense => Solver::Dense,
            SolverKind::Krylov => Solver::Krylov(KrylovOptions { tol: self.experiment.krylov_tol, ..KrylovOptions::default() }),
        }
    }

    pub fn keff_grid(&self) -> Result<rpnv_core::propagate::TimeGrid, CliError> {
        let k = &self.experiment.keff;
        rpnv_core::propagate::TimeGrid::new(0.0, us_to_s(k.t_max_us), k.n_points).map_err(|e| CliError::Config(format!("experiment.keff: {e}")))
    }

    /// Range checks and warnings about the assumptions behind the closed forms.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let e = &self.experiment;
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                out.push(Diagnostic::Error(msg.to_string()));
            }
        };
        need(e.signal.n_points >= 2 && e.signal.t_max_us > 0.0, "experiment.signal: need t_max_us > 0 and n_points >= 2");
        need(e.sensitivity.n_points >= 3, "experiment.sensitivity.n_points must be >= 3");
        need(e.sensitivity.dk_rel > 0.0 && e.sensitivity.dk_rel < 1.0, "experiment.sensitivity.dk_rel must be in (0, 1)");
        need(e.sensitivity.k_mhz.is_none_or(|k| k > 0.0), "experiment.sensitivity.k_mhz must be positive");
        need(e.keff.n_points >= 3 && e.keff.t_max_us > 0.0, "experiment.keff: need t_max_us > 0 and n_points >= 3");
        need(e.keff_map.n_theta >= 1 && e.keff_map.n_phi >= 1, "experiment.keff_map: grid must be non-empty");
        need(e.keff_phi.n_phi >= 1 && e.relaxation.n_phi >= 1 && e.nucleus_variant.n_phi >= 1, "phi grids must be non-empty");
        need(e.krylov_tol > 0.0 && e.krylov_tol < 1.0, "experiment.krylov_tol must be in (0, 1)");
        need(e.noise_sweep.gamma_mhz.iter().all(|g| *g >= 0.0), "experiment.noise_sweep.gamma_mhz must be >= 0");
        need(e.relaxation.relaxation_mhz >= 0.0, "experiment.relaxation.relaxation_mhz must be >= 0");
        need(e.depth_sweep.d1_nm.iter().chain(&e.dipolar_sweep.d1_nm).all(|d| *d > 0.0), "depth grids must be positive");
        need(e.efield_permittivity.eps_r1.iter().all(|x| *x >= 1.0), "experiment.efield_permittivity.eps_r1 must be >= 1");
        need(
            e.pulses.tau_min_ns > 0.0 && e.pulses.tau_max_ns > e.pulses.tau_min_ns && e.pulses.n_points >= 2,
            "experiment.pulses: need 0 < tau_min_ns < tau_max_ns and n_points >= 2",
        );
        let mc = &e.montecarlo;
        need(mc.n_readouts >= 1 && mc.n_events >= 2 && mc.n_t_m >= 1, "experiment.montecarlo: need n_readouts >= 1, n_events >= 2, n_t_m >= 1");
        need(mc.t_m_min_us >= 0.0 && mc.t_m_max_us >= mc.t_m_min_us && mc.trajectory_t_m_us >= 0.0, "experiment.montecarlo: invalid t_m range");
        if let Some(c) = &mc.components {
            let total: f64 = c.iter().map(|c| c.weight).sum();
            need(!c.is_empty() && c.iter().all(|c| c.k_mhz > 0.0 && c.weight >= 0.0), "experiment.montecarlo.components: rates must be > 0, weights >= 0");
            need((total - 1.0).abs() <= 1e-9, "experiment.montecarlo.components: weights must sum to 1");
        }
        let params = match self.model_params() {
            Ok(p) => p,
            Err(err) => {
                out.push(Diagnostic::Error(err.to_string()));
                return out;
            }
        };
        let omega = match params.rabi_frequency() {
            Ok(w) => w,
            Err(err) => {
                out.push(Diagnostic::Error(format!("model: {err}")));
                return out;
            }
        };
        if omega <= 0.0 {
            out.push(Diagnostic::Warning("transverse electric field is zero: no Rabi oscillation".into()));
            return out;
        }
        let zeeman = params.nv.gyro * params.b_field.magnitude();
        if zeeman > 0.05 * params.nv.d {
            out.push(Diagnostic::Warning(format!(
                "Zeeman energy g·µB·B0 = {:.3} GHz is not small against D = {:.3} GHz; the closed-form signal assumes it is",
                zeeman / 2e9 / std::f64::consts::PI,
                params.nv.d / 2e9 / std::f64::consts::PI
            )));
        }
        let k_max = params.rates.k_s.max(params.rates.k_t);
        if k_max > 0.1 * omega {
            out.push(Diagnostic::Warning(format!("recombination rate {:.3} MHz is not small against Ω = {:.3e} rad/s", k_max / 1e6, omega)));
        }
        let gamma = params.rates.gamma;
        if gamma >= omega {
            out.push(Diagnostic::Warning(format!(
                "overdamped: γ = {:.3e} s⁻¹ ≥ Ω = {:.3e} rad/s, the general dephasing solution requires γ < Ω",
                gamma, omega
            )));
        } else if gamma > 0.1 * omega {
            out.push(Diagnostic::Warning(format!("dephasing rate γ = {:.3e} s⁻¹ is not small against Ω = {:.3e} rad/s", gamma, omega)));
        }
        out
    }

    pub fn validate(&self) -> Result<Vec<String>, CliError> {
        let mut errors = Vec::new();
        let mut warnings = Vec::new();
        for d in self.diagnostics() {
            match d {
                Diagnostic::Error(m) => errors.push(m),
                Diagnostic::Warning(m) => warnings.push(m),
            }
        }
        if errors.is_empty() {
            Ok(warnings)
        } else {
            Err(CliError::Config(errors.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_clean() {
        assert!(Config::default().diagnostics().is_empty());
        let got = Config::default().model_params().unwrap();
        let want = ModelParams::default();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1e-300);
        assert!(close(got.nv.d, want.nv.d) && close(got.nv.k_perp, want.nv.k_perp) && close(got.nv.gyro, want.nv.gyro));
        assert!(close(got.rates.k_s, want.rates.k_s) && close(got.rates.k_t, want.rates.k_t));
        assert!((got.b_field.v - want.b_field.v).norm() <= 1e-12 * want.b_field.magnitude());
        assert!(close(got.geometry.d1, want.geometry.d1) && close(got.geometry.eps_r2, want.geometry.eps_r2));
        assert_eq!(got.rp.hyperfines, want.rp.hyperfines);
    }

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(Config::from_json("{}").unwrap(), Config::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Config::from_json(r#"{"model": {"rates": {"k_x_mhz": 1.0}}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("k_x_mhz") && msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn strong_field_and_overdamping_warn() {
        let mut c = Config::default();
        c.model.b_field.b0_mt = 100.0;
        assert!(matches!(c.diagnostics().as_slice(), [Diagnostic::Warning(m)] if m.contains("Zeeman")));
        let mut c = Config::default();
        c.model.rates.gamma_mhz = 10.0;
        assert!(matches!(c.diagnostics().as_slice(), [Diagnostic::Warning(m)] if m.contains("overdamped")));
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.hash(), b.hash());
        b.experiment.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn invalid_values_are_errors() {
        let mut c = Config::default();
        c.model.rates.k_s_mhz = -1.0;
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.model.hyperfines[0].principal_axes[0][0] = 0.5;
        assert!(c.validate().is_err());
    }
}
