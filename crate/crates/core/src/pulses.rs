//! Refocusing sequence U = U₀ (U_z U₀ U_z)(U_z U₀ U_z) U₀ with U₀ = e^{−iHτ}
//! and instantaneous U_z = |1⟩⟨1| − |0⟩⟨0| + |−1⟩⟨−1| gates.

use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::FieldVector;
use crate::hamiltonian::{nv_field_free, nv_local_hamiltonian, NvParams};
use crate::linalg::{CMatrix, C64, I};

pub fn u_z() -> CMatrix {
    CMatrix::from_real_diag(&[1.0, -1.0, 1.0])
}

fn check(h: &CMatrix, tau: f64) -> Result<()> {
    if h.rows() != 3 || !h.is_square() {
        return Err(Error::DimensionMismatch { expected: 3, found: h.rows() });
    }
    if !h.is_hermitian(1e-12) {
        return Err(Error::InvalidArgument("sequence Hamiltonian must be Hermitian".into()));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!("free-evolution time must be positive, got {tau}")));
    }
    Ok(())
}

pub fn sequence_unitary(h: &CMatrix, tau: f64) -> Result<CMatrix> {
    check(h, tau)?;
    let u0 = h.scale(-I * tau).expm();
    let uz = u_z();
    let flipped = uz.matmul(&u0).matmul(&uz);
    Ok(u0.matmul(&flipped).matmul(&flipped).matmul(&u0))
}

/// e^{−i4τH}.
pub fn target_unitary(h_omega: &CMatrix, tau: f64) -> CMatrix {
    h_omega.scale(-I * (4.0 * tau)).expm()
}

/// ‖U − e^{−i4τH_Ω}‖ (spectral norm).
pub fn sequence_deviation(h: &CMatrix, h_omega: &CMatrix, tau: f64) -> Result<f64> {
    let u = sequence_unitary(h, tau)?;
    Ok((&u - &target_unitary(h_omega, tau)).spectral_norm())
}

/// ‖(i/4τ) log(U e^{+i4τH_Ω})‖ in rad/s: the deviation of the sequence's
/// effective Hamiltonian from H_Ω.
pub fn effective_hamiltonian_error(h: &CMatrix, h_omega: &CMatrix, tau: f64) -> Result<f64> {
    check(h, tau)?;
    let hn = h.spectral_norm().max(h_omega.spectral_norm());
    if 4.0 * tau * hn >= core::f64::consts::PI {
        return Err(Error::StepTooLong(format!("4τ‖H‖ = {:.3} ≥ π; the matrix logarithm is ambiguous", 4.0 * tau * hn)));
    }
    let w = sequence_unitary(h, tau)?.matmul(&h_omega.scale(I * (4.0 * tau)).expm());
    // W is normal; its eigenvectors diagonalize the Hermitian part sin θ + c cos θ,
    // which is injective for |θ| < π/2 − atan(c).
    let wd = w.adjoint();
    let anti = (&w - &wd).scale(C64::new(0.0, -0.5));
    let herm = (&w + &wd).scale_real(0.5);
    let mut probe = anti;
    probe.axpy(C64::new(0.05, 0.0), &herm);
    let (_, v) = probe.eigh();
    let mut max_phase: f64 = 0.0;
    for j in 0..3 {
        let col = v.column(j);
        let wv = w.matvec(&col);
        let lambda: C64 = col.iter().zip(&wv).map(|(a, b)| a.conj() * b).sum();
        max_phase = max_phase.max(lambda.arg().abs());
    }
    if max_phase > 1.4 {
        return Err(Error::StepTooLong(format!("sequence phase {max_phase:.3} rad is outside the unambiguous range")));
    }
    Ok(max_phase / (4.0 * tau))
}

/// (H, H_Ω) of the NV for a static field `b` and electric field `e`.
pub fn nv_hamiltonians(p: &NvParams, b: FieldVector, e: FieldVector) -> (CMatrix, CMatrix) {
    (nv_local_hamiltonian(p, b, e), nv_field_free(p, e))
}

/// Least-squares slope of log y against log x.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: alloc::vec::Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: alloc::vec::Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `n` logarithmically spaced points over [a, b].
pub fn log_space(a: f64, b: f64, n: usize) -> alloc::vec::Vec<f64> {
    (0..n).map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Frame, Vec3};

    fn fields(b_perp: f64) -> (CMatrix, CMatrix) {
        let e = FieldVector::new(Vec3::new(2.2e6, 2.2e6, -1.0e6), Frame::Nv);
        let b = FieldVector::new(Vec3::new(b_perp * 0.6, b_perp * 0.8, 0.0), Frame::Nv);
        nv_hamiltonians(&NvParams::default(), b, e)
    }

    #[test]
    fn unitary_and_exact_without_transverse_field() {
        let (_, h_omega) = fields(0.0);
        let b = FieldVector::new(Vec3::new(0.0, 0.0, 1e-3), Frame::Nv);
        let h_z = nv_local_hamiltonian(&NvParams::default(), b, FieldVector::zero(Frame::Nv));
        for tau in [1e-12, 1e-10, 3e-9] {
            let u = sequence_unitary(&h_z, tau).unwrap();
            assert!((&u.matmul(&u.adjoint()) - &CMatrix::identity(3)).max_abs() < 1e-12);
            // Sz-only Hamiltonian commutes with U_z: the sequence is e^{-4iτH}.
            assert!((&u - &target_unitary(&h_z, tau)).max_abs() < 1e-9);
        }
        // U_z commutes with H_Ω, so only roundoff remains.
        let err = effective_hamiltonian_error(&h_omega, &h_omega, 1e-12).unwrap();
        assert!(err < 1e-13 * NvParams::default().d, "{err}");
    }

    #[test]
    fn deviation_is_third_order_at_short_steps() {
        let (h, h_omega) = fields(0.05e-3);
        let taus = log_space(1e-12, 1e-11, 6);
        let dev: alloc::vec::Vec<f64> = taus.iter().map(|&t| sequence_deviation(&h, &h_omega, t).unwrap()).collect();
        assert!(log_log_slope(&taus, &dev) >= 2.9, "{}", log_log_slope(&taus, &dev));
    }

    #[test]
    fn effective_hamiltonian_error_is_second_order() {
        let (h, h_omega) = fields(0.05e-3);
        let taus = log_space(1e-13, 1e-11, 6);
        let err: alloc::vec::Vec<f64> = taus.iter().map(|&t| effective_hamiltonian_error(&h, &h_omega, t).unwrap()).collect();
        assert!(log_log_slope(&taus, &err) >= 1.9);
    }

    #[test]
    fn effective_hamiltonian_error_is_linear_in_transverse_field() {
        let bs = [0.01e-3, 0.05e-3, 0.25e-3];
        let err: alloc::vec::Vec<f64> = bs
            .iter()
            .map(|&b| {
                let (h, h_omega) = fields(b);
                effective_hamiltonian_error(&h, &h_omega, 1e-12).unwrap()
            })
            .collect();
        let slope = log_log_slope(&bs, &err);
        assert!((slope - 1.0).abs() < 0.05, "{slope}");
    }

    #[test]
    fn long_steps_are_rejected() {
        let (h, h_omega) = fields(0.05e-3);
        assert!(matches!(effective_hamiltonian_error(&h, &h_omega, 1e-9), Err(Error::StepTooLong(_))));
        assert!(sequence_unitary(&CMatrix::identity(2), 1e-9).is_err());
    }
}
