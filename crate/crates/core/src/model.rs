//! Parameter set and generator assembly for the coupled NV / radical-pair
//! system and its two exact sub-models.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{lab_to_nv_frame, nv_frame_field, transverse_component, FieldVector, Frame, Geometry};
use crate::hamiltonian::{
    build_h_dipolar, build_h_nv, build_h_rp, build_h_total, NvParams, RateParams, RpParams, CHARGE, ELECTRON_1, ELECTRON_2, NV,
};
use crate::linalg::CMatrix;
use crate::liouvillian::{dephasing_jump, effective_recombination_jump, recombination_jumps, relaxation_jumps, Liouvillian};
use crate::propagate::{charge_population, initial_state, signal, SignalTrace, Solver, TimeGrid};
use crate::spin::{Spin, SpinRegister, SpinSite};

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub nv: NvParams,
    pub rp: RpParams,
    pub rates: RateParams,
    pub geometry: Geometry,
    /// Static magnetic field, tesla.
    pub b_field: FieldVector,
    /// Replaces the field computed from `geometry` when set, V/m.
    pub e_field: Option<FieldVector>,
    /// Adds the NV–radical point-dipole coupling to the charge-separated block.
    pub dipolar: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            nv: NvParams::default(),
            rp: RpParams::default(),
            rates: RateParams { k_s: 2e4, k_t: 2e5, gamma: 0.0, relaxation: 0.0 },
            geometry: Geometry::default(),
            b_field: FieldVector::spherical(0.05e-3, PI / 2.0, 2.0, Frame::Nv),
            e_field: None,
            dipolar: false,
        }
    }
}

/// Which degrees of freedom are kept.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variant {
    /// NV ⊗ electrons ⊗ nuclei ⊗ charge flag.
    Full,
    /// Electrons ⊗ nuclei ⊗ charge flag. Exact for P_E(t) whenever the
    /// radical pair does not couple to the NV.
    RadicalPair,
    /// NV ⊗ charge flag with a spin-independent recombination rate `k`.
    /// Exact for the NV signal whenever k_s = k_t = k and the radical pair
    /// does not couple to the NV.
    NvOnly { k: f64 },
}

#[derive(Clone, Debug)]
pub struct Model {
    pub register: SpinRegister,
    pub liouvillian: Liouvillian,
    pub rho0: CMatrix,
}

impl Model {
    pub fn signal(&self, grid: &TimeGrid, solver: &Solver) -> Result<SignalTrace> {
        signal(&self.liouvillian, &self.rho0, grid, &self.register, solver)
    }

    pub fn charge_population(&self, grid: &TimeGrid, solver: &Solver) -> Result<Vec<f64>> {
        charge_population(&self.liouvillian, &self.rho0, grid, &self.register, solver)
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        self.geometry.validate()?;
        if !(self.nv.d > 0.0 && self.nv.d.is_finite()) {
            return Err(Error::InvalidArgument("zero-field splitting must be positive".into()));
        }
        if !self.b_field.v.is_finite() || self.e_field.is_some_and(|e| !e.v.is_finite()) {
            return Err(Error::InvalidArgument("field vectors must be finite".into()));
        }
        Ok(())
    }

    /// Electric field at the NV in the NV frame.
    pub fn e_field_nv(&self) -> Result<FieldVector> {
        match self.e_field {
            Some(e) => Ok(lab_to_nv_frame(e)),
            None => nv_frame_field(&self.geometry),
        }
    }

    pub fn e_perp(&self) -> Result<f64> {
        Ok(transverse_component(self.e_field_nv()?).0)
    }

    /// Ω = 2 k⊥ E⊥, rad/s.
    pub fn rabi_frequency(&self) -> Result<f64> {
        Ok(self.nv.rabi_frequency(self.e_perp()?))
    }

    pub fn register(&self, variant: Variant) -> Result<SpinRegister> {
        let mut sites = Vec::new();
        if variant != Variant::RadicalPair {
            sites.push(SpinSite::spin(NV, Spin::ONE));
        }
        if !matches!(variant, Variant::NvOnly { .. }) {
            sites.push(SpinSite::spin(ELECTRON_1, Spin::HALF));
            sites.push(SpinSite::spin(ELECTRON_2, Spin::HALF));
            for hf in &self.rp.hyperfines {
                match sites.iter().find(|s| s.label == hf.nucleus) {
                    Some(existing) if existing.dim() != hf.nuclear_spin.dim() => {
                        return Err(Error::InvalidArgument(format!("nucleus {} declared with two different spins", hf.nucleus)));
                    }
                    Some(_) => {}
                    None => sites.push(SpinSite::spin(&hf.nucleus, hf.nuclear_spin)),
                }
            }
        }
        sites.push(SpinSite::charge(CHARGE));
        SpinRegister::new(sites)
    }

    pub fn build(&self, variant: Variant) -> Result<Model> {
        self.validate()?;
        let register = self.register(variant)?;
        let n = register.total_dim();
        let zero_e = FieldVector::zero(Frame::Nv);
        let (h_e, h_g, mut jumps) = match variant {
            Variant::Full => {
                let e = self.e_field_nv()?;
                let mut h_e = &build_h_nv(&self.nv, self.b_field, e, &register)? + &build_h_rp(&self.rp, self.b_field, &register)?;
                if self.dipolar {
                    h_e += &build_h_dipolar(&self.nv, &self.geometry, &register)?;
                }
                let h_g = build_h_nv(&self.nv, self.b_field, zero_e, &register)?;
                let mut jumps = recombination_jumps(&self.rates, &register)?;
                jumps.push(dephasing_jump(self.rates.gamma, &register)?);
                (h_e, h_g, jumps)
            }
            Variant::RadicalPair => {
                if self.dipolar {
                    return Err(Error::InvalidArgument("dipolar coupling needs the NV in the register".into()));
                }
                let h_e = build_h_rp(&self.rp, self.b_field, &register)?;
                (h_e, CMatrix::zeros(n, n), recombination_jumps(&self.rates, &register)?)
            }
            Variant::NvOnly { k } => {
                if self.dipolar {
                    return Err(Error::InvalidArgument("dipolar coupling needs the radical electrons in the register".into()));
                }
                let e = self.e_field_nv()?;
                let h_e = build_h_nv(&self.nv, self.b_field, e, &register)?;
                let h_g = build_h_nv(&self.nv, self.b_field, zero_e, &register)?;
                (h_e, h_g, vec![effective_recombination_jump(k, &register)?, dephasing_jump(self.rates.gamma, &register)?])
            }
        };
        if !matches!(variant, Variant::NvOnly { .. }) {
            jumps.extend(relaxation_jumps(self.rates.relaxation, &register)?);
        }
        let h = build_h_total(&h_e, &h_g, &register)?;
        let liouvillian = Liouvillian::assemble(h, jumps)?;
        let rho0 = initial_state(&register)?;
        Ok(Model { register, liouvillian, rho0 })
    }
}
