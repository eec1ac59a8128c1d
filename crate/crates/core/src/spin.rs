//! Spin operators and the composite Hilbert space of the sensor/radical-pair
//! system.
//!
//! Every spin site uses the |s, m⟩ basis ordered m = s, s−1, …, −s. The charge
//! flag site is two-dimensional with |E⟩ = (1, 0)ᵀ (charge separated) and
//! |G⟩ = (0, 1)ᵀ (recombined).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ONE, ZERO};

/// Spin quantum number stored as 2s.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Spin(u32);

impl Spin {
    pub const HALF: Spin = Spin(1);
    pub const ONE: Spin = Spin(2);

    pub fn new(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !twice.is_finite() || twice < 1.0 || (twice - twice.round()).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("spin quantum number {s} is not a positive half-integer")));
        }
        Ok(Spin(twice.round() as u32))
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }
}

/// (Sx, Sy, Sz) for spin `s` in the descending-m basis.
pub fn spin_matrices(s: Spin) -> [CMatrix; 3] {
    let n = s.dim();
    let j = s.value();
    let m = |k: usize| j - k as f64;
    let mut sp = CMatrix::zeros(n, n);
    for k in 1..n {
        // ⟨m+1|S+|m⟩ with row k-1 holding m(k)+1.
        let mk = m(k);
        sp[(k - 1, k)] = C64::new((j * (j + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm) * 0.5;
    let sy = (&sp - &sm).scale(C64::new(0.0, -0.5));
    let sz = CMatrix::from_real_diag(&(0..n).map(m).collect::<Vec<_>>());
    [sx, sy, sz]
}

/// Pauli matrices (σx, σy, σz).
pub fn pauli_matrices() -> [CMatrix; 3] {
    let [sx, sy, sz] = spin_matrices(Spin::HALF);
    [sx * 2.0, sy * 2.0, sz * 2.0]
}

/// Two-electron states in the order (|s⟩, |t0⟩, |t+⟩, |t−⟩), expressed in the
/// product basis (|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩).
pub fn pair_basis() -> [[C64; 4]; 4] {
    let r = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    [
        [ZERO, r, -r, ZERO],
        [ZERO, r, r, ZERO],
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, ZERO, ZERO, ONE],
    ]
}

/// Index of each pair state returned by [`pair_basis`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairState {
    Singlet = 0,
    T0 = 1,
    TPlus = 2,
    TMinus = 3,
}

impl PairState {
    pub const ALL: [PairState; 4] = [PairState::Singlet, PairState::T0, PairState::TPlus, PairState::TMinus];

    pub fn name(self) -> &'static str {
        match self {
            PairState::Singlet => "s",
            PairState::T0 => "t0",
            PairState::TPlus => "t+",
            PairState::TMinus => "t-",
        }
    }

    pub fn projector(self) -> CMatrix {
        let v = pair_basis()[self as usize];
        CMatrix::outer(&v, &v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteKind {
    Spin(Spin),
    /// Two-level charge-state flag with basis (|E⟩, |G⟩).
    ChargeFlag,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinSite {
    pub label: String,
    pub kind: SiteKind,
}

impl SpinSite {
    pub fn spin(label: &str, s: Spin) -> Self {
        Self { label: label.to_string(), kind: SiteKind::Spin(s) }
    }

    pub fn charge(label: &str) -> Self {
        Self { label: label.to_string(), kind: SiteKind::ChargeFlag }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SiteKind::Spin(s) => s.dim(),
            SiteKind::ChargeFlag => 2,
        }
    }
}

/// Ordered list of sites; basis states are enumerated with the last site
/// varying fastest (standard Kronecker order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinRegister {
    sites: Vec<SpinSite>,
    dims: Vec<usize>,
    total_dim: usize,
}

impl SpinRegister {
    pub fn new(sites: Vec<SpinSite>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidArgument("register needs at least one site".into()));
        }
        for (i, s) in sites.iter().enumerate() {
            if sites[..i].iter().any(|o| o.label == s.label) {
                return Err(Error::InvalidArgument(format!("duplicate site label `{}`", s.label)));
            }
        }
        let dims: Vec<usize> = sites.iter().map(SpinSite::dim).collect();
        let total_dim = dims.iter().product();
        Ok(Self { sites, dims, total_dim })
    }

    pub fn sites(&self) -> &[SpinSite] {
        &self.sites
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn contains(&self, label: &str) -> bool {
        self.sites.iter().any(|s| s.label == label)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.sites.iter().position(|s| s.label == label).ok_or_else(|| Error::UnknownSite(label.to_string()))
    }

    pub fn site(&self, label: &str) -> Result<&SpinSite> {
        Ok(&self.sites[self.index_of(label)?])
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = alloc::vec![1usize; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Embeds `op`, acting on the listed sites (in the listed order, Kronecker
    /// convention), into the full register with identities elsewhere.
    pub fn embed_multi(&self, op: &CMatrix, labels: &[&str]) -> Result<CMatrix> {
        let idx: Vec<usize> = labels.iter().map(|l| self.index_of(l)).collect::<Result<_>>()?;
        for (i, a) in idx.iter().enumerate() {
            if idx[..i].contains(a) {
                return Err(Error::InvalidArgument(format!("site `{}` listed twice", labels[i])));
            }
        }
        let sub_dims: Vec<usize> = idx.iter().map(|&k| self.dims[k]).collect();
        let sub_total: usize = sub_dims.iter().product();
        if !op.is_square() || op.rows() != sub_total {
            return Err(Error::DimensionMismatch { expected: sub_total, found: op.rows() });
        }
        let strides = self.strides();
        let n = self.total_dim;
        let mut out = CMatrix::zeros(n, n);
        // Full-index offset contributed by a sub-space index.
        let offsets: Vec<usize> = (0..sub_total)
            .map(|mut s| {
                let mut off = 0;
                for k in (0..idx.len()).rev() {
                    off += (s % sub_dims[k]) * strides[idx[k]];
                    s /= sub_dims[k];
                }
                off
            })
            .collect();
        for row in 0..n {
            // Split `row` into its sub-space index and the remainder.
            let mut sub_row = 0;
            let mut base = row;
            for (k, &site) in idx.iter().enumerate() {
                let digit = (row / strides[site]) % self.dims[site];
                base -= digit * strides[site];
                sub_row = sub_row * sub_dims[k] + digit;
            }
            for sub_col in 0..sub_total {
                let v = op[(sub_row, sub_col)];
                if v != ZERO {
                    out[(row, base + offsets[sub_col])] = v;
                }
            }
        }
        Ok(out)
    }

    pub fn embed(&self, op: &CMatrix, label: &str) -> Result<CMatrix> {
        self.embed_multi(op, &[label])
    }

    /// Embeds a product of single-site operators acting on distinct sites.
    pub fn embed_product(&self, factors: &[(&str, &CMatrix)]) -> Result<CMatrix> {
        let labels: Vec<&str> = factors.iter().map(|f| f.0).collect();
        let mut op = factors[0].1.clone();
        for f in &factors[1..] {
            op = op.kron(f.1);
        }
        self.embed_multi(&op, &labels)
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.total_dim)
    }

    /// Spin operators (Sx, Sy, Sz) of one spin site, embedded.
    pub fn spin_ops(&self, label: &str) -> Result<[CMatrix; 3]> {
        match self.site(label)?.kind {
            SiteKind::Spin(s) => {
                let [x, y, z] = spin_matrices(s);
                Ok([self.embed(&x, label)?, self.embed(&y, label)?, self.embed(&z, label)?])
            }
            SiteKind::ChargeFlag => Err(Error::InvalidArgument(format!("site `{label}` is not a spin"))),
        }
    }

    /// Reduced operator on the kept sites (kept in register order).
    pub fn partial_trace(&self, rho: &CMatrix, keep: &[&str]) -> Result<CMatrix> {
        if rho.rows() != self.total_dim || !rho.is_square() {
            return Err(Error::DimensionMismatch { expected: self.total_dim, found: rho.rows() });
        }
        let mut kept: Vec<usize> = keep.iter().map(|l| self.index_of(l)).collect::<Result<_>>()?;
        kept.sort_unstable();
        if kept.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("kept-site list has duplicates".into()));
        }
        let strides = self.strides();
        let kdims: Vec<usize> = kept.iter().map(|&k| self.dims[k]).collect();
        let kn: usize = kdims.iter().product();
        let traced: Vec<usize> = (0..self.dims.len()).filter(|k| !kept.contains(k)).collect();
        let tn: usize = traced.iter().map(|&k| self.dims[k]).product();
        let compose = |sites: &[usize], mut s: usize| -> usize {
            let mut off = 0;
            for &k in sites.iter().rev() {
                off += (s % self.dims[k]) * strides[k];
                s /= self.dims[k];
            }
            off
        };
        let kept_off: Vec<usize> = (0..kn).map(|s| compose(&kept, s)).collect();
        let traced_off: Vec<usize> = (0..tn).map(|s| compose(&traced, s)).collect();
        let mut out = CMatrix::zeros(kn, kn);
        for a in 0..kn {
            for b in 0..kn {
                let mut acc = ZERO;
                for &t in &traced_off {
                    acc += rho[(kept_off[a] + t, kept_off[b] + t)];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(out)
    }
}
