//! Radical-pair, NV and NV–radical dipolar Hamiltonians (rad/s).
//!
//! Magnetic and electric fields enter as [`FieldVector`]s and are rotated into
//! the NV frame where needed. Hyperfine principal axes are expressed in the
//! frame in which (θ, φ) of the static field are given, i.e. the NV frame.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{lab_to_nv_frame, FieldVector, Frame, Geometry, Vec3};
use crate::linalg::{CMatrix, C64};
use crate::spin::{spin_matrices, SiteKind, Spin, SpinRegister};
use crate::units::{hyperfine_mt_to_angular, ELECTRON_GYRO, HBAR, MU0_OVER_4PI};

pub const NV: &str = "nv";
pub const ELECTRON_1: &str = "e1";
pub const ELECTRON_2: &str = "e2";
pub const CHARGE: &str = "charge";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NvParams {
    /// Zero-field splitting, rad/s.
    pub d: f64,
    /// rad/s per V/m.
    pub k_par: f64,
    /// rad/s per V/m.
    pub k_perp: f64,
    /// rad/s per tesla.
    pub gyro: f64,
}

impl Default for NvParams {
    fn default() -> Self {
        Self { d: 2.0 * PI * 2.87e9, k_par: 2.0 * PI * 0.0035, k_perp: 2.0 * PI * 0.17, gyro: ELECTRON_GYRO }
    }
}

impl NvParams {
    /// Ω = 2 k⊥ E⊥.
    pub fn rabi_frequency(&self, e_perp: f64) -> f64 {
        2.0 * self.k_perp * e_perp
    }
}

/// Hyperfine coupling of one nucleus to one radical electron.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperfineTensor {
    pub nucleus: String,
    pub nuclear_spin: Spin,
    /// 1 or 2.
    pub electron: usize,
    /// Principal values, mT.
    pub principal_values: [f64; 3],
    /// `principal_axes[i]` is the unit axis belonging to `principal_values[i]`.
    pub principal_axes: [[f64; 3]; 3],
}

const AXES_TOLERANCE: f64 = 1e-3;

impl HyperfineTensor {
    /// Axes that deviate from orthonormality by at most 1e-3 are accepted and
    /// symmetrically (Löwdin) orthonormalized.
    pub fn new(nucleus: &str, nuclear_spin: Spin, electron: usize, principal_values: [f64; 3], axes: [[f64; 3]; 3]) -> Result<Self> {
        if electron != 1 && electron != 2 {
            return Err(Error::InvalidArgument(format!("electron index must be 1 or 2, got {electron}")));
        }
        if principal_values.iter().chain(axes.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("hyperfine tensor {nucleus} has non-finite entries")));
        }
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let g: f64 = (0..3).map(|c| axes[i][c] * axes[j][c]).sum();
                dev = dev.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        if dev > AXES_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "hyperfine axes of {nucleus} are not orthonormal (max Gram deviation {dev:.3e})"
            )));
        }
        Ok(Self { nucleus: nucleus.into(), nuclear_spin, electron, principal_values, principal_axes: lowdin(axes) })
    }

    /// H6 of the flavin anion radical (electron 1). Each printed column of the
    /// source table is the axis of the principal value in the same column.
    pub fn h6() -> Self {
        let printed = [[-0.0362, 0.2937, 0.9552], [0.7948, 0.5879, -0.1507], [-0.6059, 0.7537, -0.2546]];
        let mut axes = [[0.0; 3]; 3];
        for (i, axis) in axes.iter_mut().enumerate() {
            for (c, v) in axis.iter_mut().enumerate() {
                *v = printed[c][i];
            }
        }
        Self::new("H6", Spin::HALF, 1, [-0.218, -0.202, -0.054], axes).expect("tabulated tensor is valid")
    }

    /// Cartesian tensor R·diag(A)·Rᵀ in mT.
    pub fn cartesian_mt(&self) -> [[f64; 3]; 3] {
        let mut a = [[0.0; 3]; 3];
        for (v, axis) in self.principal_values.iter().zip(&self.principal_axes) {
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] += v * axis[i] * axis[j];
                }
            }
        }
        a
    }

    /// Cartesian tensor in rad/s.
    pub fn cartesian(&self) -> [[f64; 3]; 3] {
        self.cartesian_mt().map(|row| row.map(hyperfine_mt_to_angular))
    }

    pub fn electron_label(&self) -> &'static str {
        if self.electron == 1 {
            ELECTRON_1
        } else {
            ELECTRON_2
        }
    }
}

/// R (RᵀR)^{-1/2} for axes stored as rows.
fn lowdin(axes: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let gram = CMatrix::from_fn(3, 3, |i, j| C64::new((0..3).map(|c| axes[i][c] * axes[j][c]).sum(), 0.0));
    let (vals, vecs) = gram.eigh();
    let inv_sqrt = CMatrix::from_fn(3, 3, |i, j| {
        let mut s = 0.0;
        for k in 0..3 {
            s += vecs[(i, k)].re * vecs[(j, k)].re / vals[k].sqrt();
        }
        C64::new(s, 0.0)
    });
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|j| inv_sqrt[(i, j)].re * axes[j][c]).sum();
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct RpParams {
    pub hyperfines: Vec<HyperfineTensor>,
    pub gyro: f64,
}

impl Default for RpParams {
    fn default() -> Self {
        Self { hyperfines: alloc::vec![HyperfineTensor::h6()], gyro: ELECTRON_GYRO }
    }
}

/// Reaction and noise rates, 1/s.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RateParams {
    pub k_s: f64,
    pub k_t: f64,
    pub gamma: f64,
    pub relaxation: f64,
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k_s", self.k_s), ("k_t", self.k_t), ("gamma", self.gamma), ("relaxation", self.relaxation)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("rate {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn in_nv_frame(v: FieldVector) -> Vec3 {
    match v.frame {
        Frame::Nv => v.v,
        Frame::Lab => lab_to_nv_frame(v).v,
    }
}

fn dot_ops(v: Vec3, s: &[CMatrix; 3]) -> CMatrix {
    let mut out = s[0].scale_real(v.x);
    out.axpy(C64::new(v.y, 0.0), &s[1]);
    out.axpy(C64::new(v.z, 0.0), &s[2]);
    out
}

/// γ_e Σ_k B·S_k + Σ S_k·A·I on the register.
pub fn build_h_rp(p: &RpParams, b: FieldVector, register: &SpinRegister) -> Result<CMatrix> {
    let b = in_nv_frame(b);
    let mut h = CMatrix::zeros(register.total_dim(), register.total_dim());
    for e in [ELECTRON_1, ELECTRON_2] {
        let s = register.spin_ops(e)?;
        h += &dot_ops(b * p.gyro, &s);
    }
    for hf in &p.hyperfines {
        let se = spin_matrices(Spin::HALF);
        let site = register.site(&hf.nucleus)?;
        let spin = match site.kind {
            SiteKind::Spin(s) => s,
            SiteKind::ChargeFlag => return Err(Error::InvalidArgument(format!("site {} is not a spin", hf.nucleus))),
        };
        if spin != hf.nuclear_spin {
            return Err(Error::DimensionMismatch { expected: hf.nuclear_spin.dim(), found: spin.dim() });
        }
        let si = spin_matrices(spin);
        let a = hf.cartesian();
        for (i, ai) in a.iter().enumerate() {
            for (j, &aij) in ai.iter().enumerate() {
                if aij == 0.0 {
                    continue;
                }
                let term = register.embed_product(&[(hf.electron_label(), &se[i]), (hf.nucleus.as_str(), &si[j])])?;
                h.axpy(C64::new(aij, 0.0), &term);
            }
        }
    }
    Ok(h)
}

/// NV Hamiltonian as a 3×3 matrix in the |+1, 0, −1⟩ basis.
pub fn nv_local_hamiltonian(p: &NvParams, b: FieldVector, e: FieldVector) -> CMatrix {
    let b = in_nv_frame(b);
    let mut h = nv_field_free(p, e);
    let s = spin_matrices(Spin::ONE);
    h += &dot_ops(b * p.gyro, &s);
    h
}

/// H_Ω: the NV Hamiltonian without the Zeeman term.
pub fn nv_field_free(p: &NvParams, e: FieldVector) -> CMatrix {
    let e = in_nv_frame(e);
    let [sx, sy, sz] = spin_matrices(Spin::ONE);
    let id = CMatrix::identity(3);
    let mut h = (&sz.matmul(&sz) - &id.scale_real(2.0 / 3.0)).scale_real(p.d + p.k_par * e.z);
    let xx_yy = &sx.matmul(&sx) - &sy.matmul(&sy);
    let xy_yx = sx.anticommutator(&sy);
    h.axpy(C64::new(-p.k_perp * e.x, 0.0), &xx_yy);
    h.axpy(C64::new(p.k_perp * e.y, 0.0), &xy_yx);
    h
}

pub fn build_h_nv(p: &NvParams, b: FieldVector, e: FieldVector, register: &SpinRegister) -> Result<CMatrix> {
    register.embed(&nv_local_hamiltonian(p, b, e), NV)
}

fn charge_projectors(register: &SpinRegister) -> Result<(CMatrix, CMatrix)> {
    let pe = register.embed(&CMatrix::from_real_diag(&[1.0, 0.0]), CHARGE)?;
    let pg = register.embed(&CMatrix::from_real_diag(&[0.0, 1.0]), CHARGE)?;
    Ok((pe, pg))
}

/// Block Hamiltonian (H_E)·|E⟩⟨E| + (H_G)·|G⟩⟨G| for full-register operators that commute
/// with the charge flag.
pub fn build_h_total(h_e: &CMatrix, h_g: &CMatrix, register: &SpinRegister) -> Result<CMatrix> {
    let n = register.total_dim();
    for m in [h_e, h_g] {
        if m.rows() != n || m.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: m.rows() });
        }
    }
    let (pe, pg) = charge_projectors(register)?;
    Ok(&h_e.matmul(&pe) + &h_g.matmul(&pg))
}

/// Point-dipole coupling between the NV spin and each radical electron.
pub fn build_h_dipolar(p: &NvParams, g: &Geometry, register: &SpinRegister) -> Result<CMatrix> {
    g.validate()?;
    let s_nv = spin_matrices(Spin::ONE);
    let s_e = spin_matrices(Spin::HALF);
    let n = register.total_dim();
    let mut h = CMatrix::zeros(n, n);
    for (label, r) in [ELECTRON_1, ELECTRON_2].iter().zip(g.radical_displacements_nv()) {
        let dist = r.norm();
        if dist < 1e-15 {
            return Err(Error::SingularGeometry(format!("radical {label} coincides with the NV")));
        }
        let u = r * (1.0 / dist);
        let j = MU0_OVER_4PI * HBAR * p.gyro * p.gyro / (dist * dist * dist);
        let ua = u.to_array();
        for a in 0..3 {
            for b in 0..3 {
                let c = j * ((a == b) as u8 as f64 - 3.0 * ua[a] * ua[b]);
                if c.abs() < 1e-300 {
                    continue;
                }
                let term = register.embed_product(&[(NV, &s_nv[a]), (label, &s_e[b])])?;
                h.axpy(C64::new(c, 0.0), &term);
            }
        }
    }
    Ok(h)
}
