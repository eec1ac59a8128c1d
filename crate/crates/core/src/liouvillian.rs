//! Lindblad generator ρ̇ = −i[H, ρ] + Σ_j r_j (L_j ρ L_j† − ½{L_j†L_j, ρ}).
//!
//! Recombination (rate k per channel), NV dephasing (rate γ, L = S_z) and
//! radical relaxation (rate Γ, L = σ_{x,y,z} per electron) all use this form,
//! which is the k/2·(2LρL† − …) and γ·(SρS − ½…) normalization written out.
//! Vectorization is column stacking: vec(AρB) = (Bᵀ ⊗ A) vec(ρ).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hamiltonian::{RateParams, CHARGE, ELECTRON_1, ELECTRON_2, NV};
use crate::linalg::{CMatrix, CsrMatrix, C64, I, ZERO};
use crate::spin::{pauli_matrices, spin_matrices, PairState, Spin, SpinRegister};

#[derive(Clone, Debug, PartialEq)]
pub struct JumpTerm {
    pub label: String,
    pub operator: CMatrix,
    /// 1/s.
    pub rate: f64,
}

impl JumpTerm {
    pub fn new(label: &str, operator: CMatrix, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidArgument(format!("jump {label}: rate must be finite and >= 0, got {rate}")));
        }
        if !operator.is_square() {
            return Err(Error::DimensionMismatch { expected: operator.rows(), found: operator.cols() });
        }
        Ok(Self { label: label.into(), operator, rate })
    }
}

/// |G⟩⟨E| on the charge flag.
fn charge_lowering() -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(1, 0)] = C64::new(1.0, 0.0);
    m
}

/// L_u = |u, G⟩⟨u, E| for u ∈ {s, t0, t+, t−}; rate k_s for the singlet and
/// k_t for each triplet channel.
pub fn recombination_jumps(rates: &RateParams, register: &SpinRegister) -> Result<Vec<JumpTerm>> {
    let lower = charge_lowering();
    PairState::ALL
        .iter()
        .map(|&u| {
            let op = u.projector().kron(&lower);
            let full = register.embed_multi(&op, &[ELECTRON_1, ELECTRON_2, CHARGE])?;
            let rate = if u == PairState::Singlet { rates.k_s } else { rates.k_t };
            JumpTerm::new(&format!("recombination_{}", u.name()), full, rate)
        })
        .collect()
}

/// Spin-independent decay |G⟩⟨E| ⊗ 1 at rate k, for registers without the
/// radical electrons.
pub fn effective_recombination_jump(k: f64, register: &SpinRegister) -> Result<JumpTerm> {
    JumpTerm::new("recombination", register.embed(&charge_lowering(), CHARGE)?, k)
}

/// L = S_z of the NV with rate γ.
pub fn dephasing_jump(gamma: f64, register: &SpinRegister) -> Result<JumpTerm> {
    let sz = spin_matrices(Spin::ONE)[2].clone();
    JumpTerm::new("dephasing", register.embed(&sz, NV)?, gamma)
}

/// σ_x, σ_y, σ_z on each radical electron, each with rate Γ.
pub fn relaxation_jumps(relaxation: f64, register: &SpinRegister) -> Result<Vec<JumpTerm>> {
    if relaxation == 0.0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(6);
    for e in [ELECTRON_1, ELECTRON_2] {
        for (axis, s) in ["x", "y", "z"].iter().zip(pauli_matrices()) {
            out.push(JumpTerm::new(&format!("relaxation_{e}_{axis}"), register.embed(&s, e)?, relaxation)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Liouvillian {
    h: CMatrix,
    jumps: Vec<JumpTerm>,
    /// K = −iH − ½ Σ r L†L.
    k: CMatrix,
}

fn nonzeros(m: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for i in 0..m.rows() {
        for (j, &v) in m.row(i).iter().enumerate() {
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

impl Liouvillian {
    pub fn assemble(h: CMatrix, jumps: Vec<JumpTerm>) -> Result<Self> {
        let n = h.rows();
        if !h.is_square() {
            return Err(Error::DimensionMismatch { expected: n, found: h.cols() });
        }
        if let Some(bad) = jumps.iter().find(|j| j.operator.rows() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.operator.rows() });
        }
        let jumps: Vec<JumpTerm> = jumps.into_iter().filter(|j| j.rate > 0.0).collect();
        let mut k = h.scale(-I);
        for j in &jumps {
            let ldl = j.operator.adjoint().matmul(&j.operator);
            k.axpy(C64::new(-0.5 * j.rate, 0.0), &ldl);
        }
        Ok(Self { h, jumps, k })
    }

    pub fn dim(&self) -> usize {
        self.h.rows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.h
    }

    pub fn jumps(&self) -> &[JumpTerm] {
        &self.jumps
    }

    /// ρ̇ for a given ρ.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.rows() != self.dim() || !rho.is_square() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rho.rows() });
        }
        let mut out = self.k.matmul(rho);
        out += &rho.matmul(&self.k.adjoint());
        for j in &self.jumps {
            let t = j.operator.matmul(rho).matmul(&j.operator.adjoint());
            out.axpy(C64::new(j.rate, 0.0), &t);
        }
        Ok(out)
    }

    /// Superoperator on column-stacked vectors, N² × N².
    pub fn superoperator(&self) -> CsrMatrix {
        let n = self.dim();
        let mut trip = Vec::new();
        let kn = nonzeros(&self.k);
        for &(a, b, v) in &kn {
            for i in 0..n {
                // (1 ⊗ K) and (K̄ ⊗ 1)
                trip.push((i * n + a, i * n + b, v));
                trip.push((a * n + i, b * n + i, v.conj()));
            }
        }
        for j in &self.jumps {
            let ln = nonzeros(&j.operator);
            for &(a, b, u) in &ln {
                for &(c, d, w) in &ln {
                    trip.push((a * n + c, b * n + d, u.conj() * w * j.rate));
                }
            }
        }
        CsrMatrix::from_triplets(n * n, n * n, trip)
    }

    pub fn superoperator_dense(&self) -> CMatrix {
        self.superoperator().to_dense()
    }

    /// max_j |Σ_i L[(i,i), j]|: the trace functional's image under the generator.
    pub fn trace_defect(&self) -> f64 {
        let n = self.dim();
        let l = self.superoperator();
        let mut sums = alloc::vec![ZERO; n * n];
        for i in 0..n {
            for (c, v) in l.row_entries(i * n + i) {
                sums[c] += v;
            }
        }
        sums.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::SpinSite;

    fn register() -> SpinRegister {
        SpinRegister::new(alloc::vec![
            SpinSite::spin(NV, Spin::ONE),
            SpinSite::spin(ELECTRON_1, Spin::HALF),
            SpinSite::spin(ELECTRON_2, Spin::HALF),
            SpinSite::charge(CHARGE),
        ])
        .unwrap()
    }

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = CMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        &a + &a.adjoint()
    }

    fn random_density(n: usize, seed: u64) -> CMatrix {
        let a = random_hermitian(n, seed);
        let rho = a.matmul(&a.adjoint());
        let tr = rho.trace().re;
        rho.scale_real(1.0 / tr)
    }

    fn full_liouvillian(reg: &SpinRegister) -> Liouvillian {
        let rates = RateParams { k_s: 2e4, k_t: 2e5, gamma: 5e5, relaxation: 1e5 };
        let mut jumps = recombination_jumps(&rates, reg).unwrap();
        jumps.push(dephasing_jump(rates.gamma, reg).unwrap());
        jumps.extend(relaxation_jumps(rates.relaxation, reg).unwrap());
        Liouvillian::assemble(random_hermitian(reg.total_dim(), 3).scale_real(1e6), jumps).unwrap()
    }

    #[test]
    fn jumps_are_nilpotent_and_resolve_the_e_projector() {
        let reg = register();
        let rates = RateParams { k_s: 1.0, k_t: 1.0, ..RateParams::default() };
        let jumps = recombination_jumps(&rates, &reg).unwrap();
        assert_eq!(jumps.len(), 4);
        let mut sum = CMatrix::zeros(reg.total_dim(), reg.total_dim());
        for j in &jumps {
            assert_eq!(j.operator.matmul(&j.operator).max_abs(), 0.0);
            sum += &j.operator.adjoint().matmul(&j.operator);
        }
        let pe = reg.embed(&CMatrix::from_real_diag(&[1.0, 0.0]), CHARGE).unwrap();
        assert!((&sum - &pe).max_abs() < 1e-14);
    }

    #[test]
    fn relaxation_count() {
        let reg = register();
        assert!(relaxation_jumps(0.0, &reg).unwrap().is_empty());
        assert_eq!(relaxation_jumps(1.0, &reg).unwrap().len(), 6);
    }

    #[test]
    fn superoperator_matches_apply() {
        let reg = register();
        let l = full_liouvillian(&reg);
        let rho = random_density(reg.total_dim(), 7);
        let direct = l.apply(&rho).unwrap();
        let via_vec = CMatrix::from_vec_col(reg.total_dim(), &l.superoperator().matvec(&rho.vec_col()));
        assert!((&direct - &via_vec).max_abs() < 1e-9 * direct.max_abs());
    }

    #[test]
    fn trace_preserving() {
        let reg = register();
        let l = full_liouvillian(&reg);
        assert!(l.trace_defect() < 1e-12 * 1e6);
        for seed in 0..4 {
            let rho = random_density(reg.total_dim(), 11 + seed);
            assert!(l.apply(&rho).unwrap().trace().norm() < 1e-12 * 1e7);
        }
    }

    #[test]
    fn pure_commutator_preserves_trace_and_purity() {
        let reg = register();
        let h = random_hermitian(reg.total_dim(), 5);
        let l = Liouvillian::assemble(h, Vec::new()).unwrap();
        let psi: Vec<C64> = (0..reg.total_dim()).map(|i| C64::new(if i == 3 { 1.0 } else { 0.0 }, 0.0)).collect();
        let rho = CMatrix::outer(&psi, &psi);
        let d = l.apply(&rho).unwrap();
        assert!(d.trace().norm() < 1e-12);
        // d/dt Tr ρ² = 2 Tr(ρ ρ̇) = 0 for unitary evolution
        assert!(rho.matmul(&d).trace().norm() < 1e-12);
    }

    #[test]
    fn dephasing_fixed_points() {
        let reg = register();
        let n = reg.total_dim();
        let l = Liouvillian::assemble(CMatrix::zeros(n, n), alloc::vec![dephasing_jump(1e6, &reg).unwrap()]).unwrap();
        let mixed = CMatrix::identity(n).scale_real(1.0 / n as f64);
        assert!(l.apply(&mixed).unwrap().max_abs() < 1e-15);
        let diag = CMatrix::from_real_diag(&(0..n).map(|i| (i + 1) as f64).collect::<Vec<_>>());
        assert!(l.apply(&diag).unwrap().max_abs() < 1e-9);
        let zero = Liouvillian::assemble(CMatrix::zeros(n, n), alloc::vec![dephasing_jump(0.0, &reg).unwrap()]).unwrap();
        assert!(zero.jumps().is_empty());
    }

    #[test]
    fn dimension_mismatch() {
        let reg = register();
        let bad = JumpTerm::new("x", CMatrix::identity(3), 1.0).unwrap();
        assert!(matches!(
            Liouvillian::assemble(CMatrix::zeros(reg.total_dim(), reg.total_dim()), alloc::vec![bad]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(JumpTerm::new("x", CMatrix::identity(3), -1.0).is_err());
    }
}
