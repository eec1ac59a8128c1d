//! Electric field of the charge-separated radical pair at the NV site, and the
//! crystal (lab) ↔ NV frame rotation.
//!
//! Lab frame: x̂ = [100], ŷ = [010], ẑ = [001] is the outward surface normal of
//! a ⟨001⟩ diamond surface at z = 0 (diamond below, medium above). The NV sits
//! at (0, 0, −d1) with its axis along [111]. The radical pair lies on the
//! surface with its midpoint at (d3, 0, 0); the charge-pair axis makes the
//! angle `dipole_azimuth` with x̂. The anion (radical 1, −q) sits at
//! midpoint − ½d2·û and the cation (radical 2, +q) at midpoint + ½d2·û.
//!
//! NV frame: ẑ along [111]; x̂ is the projection of the surface normal onto the
//! plane perpendicular to the axis, i.e. it lies in the (1 −1 0) mirror plane.

use alloc::format;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::units::{ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY};

/// Dipole azimuth (rad) for which the default geometry gives E⊥ = 3.15 MV/m.
pub const DEFAULT_DIPOLE_AZIMUTH: f64 = 1.293_552_3;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self * (1.0 / self.norm())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self * -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Nv,
}

/// Electric (V/m) or magnetic (T) field vector tagged with its frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldVector {
    pub v: Vec3,
    pub frame: Frame,
}

impl FieldVector {
    pub fn new(v: Vec3, frame: Frame) -> Self {
        Self { v, frame }
    }

    pub fn zero(frame: Frame) -> Self {
        Self { v: Vec3::default(), frame }
    }

    /// B0·(sinθ cosφ, sinθ sinφ, cosθ).
    pub fn spherical(magnitude: f64, theta: f64, phi: f64, frame: Frame) -> Self {
        let v = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * magnitude;
        Self { v, frame }
    }

    pub fn magnitude(&self) -> f64 {
        self.v.norm()
    }
}

/// Orthonormal NV axes expressed in lab coordinates (rows x̂, ŷ, ẑ).
pub fn nv_axes_in_lab() -> [Vec3; 3] {
    let z = Vec3::new(1.0, 1.0, 1.0).normalized();
    let normal = Vec3::new(0.0, 0.0, 1.0);
    let x = (normal - z * normal.dot(z)).normalized();
    let y = z.cross(x);
    [x, y, z]
}

pub fn lab_to_nv_frame(v: FieldVector) -> FieldVector {
    match v.frame {
        Frame::Nv => v,
        Frame::Lab => {
            let [x, y, z] = nv_axes_in_lab();
            FieldVector::new(Vec3::new(v.v.dot(x), v.v.dot(y), v.v.dot(z)), Frame::Nv)
        }
    }
}

pub fn nv_to_lab_frame(v: FieldVector) -> FieldVector {
    match v.frame {
        Frame::Lab => v,
        Frame::Nv => {
            let [x, y, z] = nv_axes_in_lab();
            FieldVector::new(x * v.v.x + y * v.v.y + z * v.v.z, Frame::Lab)
        }
    }
}

/// (E⊥, azimuth) of an NV-frame vector.
pub fn transverse_component(e: FieldVector) -> (f64, f64) {
    debug_assert_eq!(e.frame, Frame::Nv);
    (e.v.x.hypot(e.v.y), e.v.y.atan2(e.v.x))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    /// NV depth below the surface, m.
    pub d1: f64,
    /// Radical–radical separation, m.
    pub d2: f64,
    /// Horizontal NV–pair offset, m.
    pub d3: f64,
    /// Relative permittivity above the surface.
    pub eps_r1: f64,
    /// Relative permittivity of diamond.
    pub eps_r2: f64,
    /// Orientation of the charge-pair axis in the surface plane, rad.
    pub dipole_azimuth: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { d1: 5e-9, d2: 2e-9, d3: 4e-9, eps_r1: 1.0, eps_r2: 5.7, dipole_azimuth: DEFAULT_DIPOLE_AZIMUTH }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.d1, self.d2, self.d3, self.eps_r1, self.eps_r2, self.dipole_azimuth].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("geometry has non-finite entries".into()));
        }
        if self.d1 <= 0.0 || self.d3 <= 0.0 || self.d2 < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "geometry needs d1 > 0, d3 > 0, d2 >= 0 (got d1={}, d2={}, d3={})",
                self.d1, self.d2, self.d3
            )));
        }
        if self.eps_r1 < 1.0 || self.eps_r2 < 1.0 {
            return Err(Error::InvalidArgument("relative permittivities must be >= 1".into()));
        }
        Ok(())
    }

    pub fn nv_position(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, -self.d1)
    }

    fn dipole_axis(&self) -> Vec3 {
        Vec3::new(self.dipole_azimuth.cos(), self.dipole_azimuth.sin(), 0.0)
    }

    /// Lab positions of the (+q, −q) charges.
    pub fn charge_positions(&self) -> (Vec3, Vec3) {
        let mid = Vec3::new(self.d3, 0.0, 0.0);
        let half = self.dipole_axis() * (0.5 * self.d2);
        (mid + half, mid - half)
    }

    /// Displacements NV → radical 1 and NV → radical 2, in the NV frame.
    pub fn radical_displacements_nv(&self) -> [Vec3; 2] {
        let (plus, minus) = self.charge_positions();
        let nv = self.nv_position();
        [minus - nv, plus - nv].map(|d| lab_to_nv_frame(FieldVector::new(d, Frame::Lab)).v)
    }
}

fn coulomb_field(charge_at: Vec3, sign: f64, at: Vec3, prefactor: f64) -> Result<Vec3> {
    let r = at - charge_at;
    let dist = r.norm();
    if dist < 1e-15 {
        return Err(Error::SingularGeometry("NV coincides with a charge".into()));
    }
    Ok(r * (sign * prefactor / (dist * dist * dist)))
}

/// Field of a single point charge `sign·q` on the interface, screened by the
/// image factor 2/(ε_r1 + ε_r2).
pub fn single_charge_field(g: &Geometry, charge_at: Vec3, sign: f64) -> Result<FieldVector> {
    let prefactor = ELEMENTARY_CHARGE / (4.0 * PI * VACUUM_PERMITTIVITY) * 2.0 / (g.eps_r1 + g.eps_r2);
    Ok(FieldVector::new(coulomb_field(charge_at, sign, g.nv_position(), prefactor)?, Frame::Lab))
}

/// Electric field at the NV (lab frame) from the ±q radical pair.
pub fn image_charge_field(g: &Geometry) -> Result<FieldVector> {
    g.validate()?;
    let (plus, minus) = g.charge_positions();
    let ep = single_charge_field(g, plus, 1.0)?;
    let em = single_charge_field(g, minus, -1.0)?;
    Ok(FieldVector::new(ep.v + em.v, Frame::Lab))
}

/// Electric field at the NV expressed in the NV frame.
pub fn nv_frame_field(g: &Geometry) -> Result<FieldVector> {
    Ok(lab_to_nv_frame(image_charge_field(g)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincident_charges_give_zero_field() {
        let g = Geometry { d2: 0.0, ..Geometry::default() };
        assert!(image_charge_field(&g).unwrap().magnitude() < 1e-20);
    }

    #[test]
    fn nv_at_charge_is_singular() {
        let g = Geometry::default();
        let (plus, _) = g.charge_positions();
        let res = single_charge_field(&g, plus, 1.0).and_then(|_| {
            let probe = Geometry { d1: 1e-30, ..g };
            coulomb_field(plus, 1.0, probe.nv_position() + Vec3::new(plus.x, plus.y, 1e-30), 1.0)
        });
        assert!(matches!(res, Err(Error::SingularGeometry(_))));
    }

    #[test]
    fn superposition_of_single_charges() {
        let g = Geometry::default();
        let (plus, minus) = g.charge_positions();
        let sum = single_charge_field(&g, plus, 1.0).unwrap().v + single_charge_field(&g, minus, -1.0).unwrap().v;
        let total = image_charge_field(&g).unwrap().v;
        assert!((sum - total).norm() < 1e-9 * total.norm());
    }

    #[test]
    fn equal_permittivities_scale_as_inverse_epsilon() {
        let vac = Geometry { eps_r1: 1.0, eps_r2: 1.0, ..Geometry::default() };
        let med = Geometry { eps_r1: 4.0, eps_r2: 4.0, ..Geometry::default() };
        let a = image_charge_field(&vac).unwrap().v;
        let b = image_charge_field(&med).unwrap().v;
        assert!((a * 0.25 - b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn dilation_scales_as_inverse_square() {
        let g = Geometry::default();
        let big = Geometry { d1: 3.0 * g.d1, d2: 3.0 * g.d2, d3: 3.0 * g.d3, ..g };
        let a = image_charge_field(&g).unwrap().v;
        let b = image_charge_field(&big).unwrap().v;
        assert!((a * (1.0 / 9.0) - b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn frame_rotation() {
        let axis = FieldVector::new(Vec3::new(2.0, 2.0, 2.0), Frame::Lab);
        let nv = lab_to_nv_frame(axis);
        assert!(nv.v.x.abs() < 1e-15 && nv.v.y.abs() < 1e-15);
        assert!((nv.v.z - axis.magnitude()).abs() < 1e-12);
        let v = FieldVector::new(Vec3::new(0.3, -1.7, 2.2), Frame::Lab);
        let there = lab_to_nv_frame(v);
        assert!((there.magnitude() - v.magnitude()).abs() < 1e-12);
        let back = nv_to_lab_frame(there);
        assert!((back.v - v.v).norm() < 1e-12);
        // x̂ lies in the mirror plane containing the surface normal.
        let [x, _, z] = nv_axes_in_lab();
        assert!(x.dot(Vec3::new(1.0, -1.0, 0.0)).abs() < 1e-15);
        assert!(x.dot(z).abs() < 1e-15 && x.z > 0.0);
    }

    #[test]
    fn transverse_magnitude() {
        let (p, _) = transverse_component(FieldVector::new(Vec3::new(0.0, 0.0, 7.0), Frame::Nv));
        assert_eq!(p, 0.0);
        let (p, az) = transverse_component(FieldVector::new(Vec3::new(3e6, 4e6, 0.0), Frame::Nv));
        assert!((p - 5e6).abs() < 1e-6);
        assert!((az - (4.0f64).atan2(3.0)).abs() < 1e-15);
    }

    #[test]
    fn default_geometry_transverse_field() {
        let (e_perp, _) = transverse_component(nv_frame_field(&Geometry::default()).unwrap());
        assert!((e_perp - 3.15e6).abs() < 1e-3 * 3.15e6, "E_perp = {e_perp}");
    }

    #[test]
    fn default_azimuth_is_the_first_root() {
        // Bisection on E⊥(azimuth) − 3.15 MV/m over [1.0, 1.5] rad.
        let f = |a: f64| {
            let g = Geometry { dipole_azimuth: a, ..Geometry::default() };
            transverse_component(nv_frame_field(&g).unwrap()).0 - 3.15e6
        };
        let (mut lo, mut hi) = (1.0, 1.5);
        assert!(f(lo) * f(hi) < 0.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((lo - DEFAULT_DIPOLE_AZIMUTH).abs() < 1e-6, "root at {lo}");
    }

    #[test]
    fn field_decreases_with_medium_permittivity() {
        let mut last = f64::INFINITY;
        for k in 0..=18 {
            let g = Geometry { eps_r1: 1.0 + 0.5 * k as f64, ..Geometry::default() };
            let (e, _) = transverse_component(nv_frame_field(&g).unwrap());
            assert!(e < last);
            last = e;
        }
    }
}
