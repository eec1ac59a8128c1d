//! Exponential propagation of vectorized density matrices.
//!
//! Both solvers first restrict the generator to the set of vectorized entries
//! that are reachable from the initial state (and, when only expectation
//! values are wanted, that can reach an observed entry). The restriction is
//! exact: entries outside the forward set stay zero and entries outside the
//! backward set never feed back into the observables.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hamiltonian::{CHARGE, ELECTRON_1, ELECTRON_2, NV};
use crate::linalg::{vec_norm, CMatrix, CsrMatrix, C64, ZERO};
use crate::liouvillian::Liouvillian;
use crate::spin::{PairState, SiteKind, SpinRegister};

/// Uniform grid of `n_points` times from `t0` to `t1` inclusive, seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_points: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t0 >= 0.0 && t1 > t0) {
            return Err(Error::InvalidArgument(format!("time grid needs 0 <= t0 < t1, got [{t0}, {t1}]")));
        }
        if n_points < 2 {
            return Err(Error::InvalidArgument("time grid needs at least 2 points".into()));
        }
        Ok(Self { t0, t1, n_points })
    }

    /// Smallest grid with Δt ≤ 2π/(20Ω).
    pub fn resolving(t0: f64, t1: f64, omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidArgument(format!("frequency must be positive, got {omega}")));
        }
        let max_dt = 2.0 * PI / (20.0 * omega);
        let n = ((t1 - t0) / max_dt).ceil() as usize + 1;
        Self::new(t0, t1, n.max(2))
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.n_points - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.time(i)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    NumericDense,
    NumericKrylov,
    Analytic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::NumericDense => "numeric-dense",
            Method::NumericKrylov => "numeric-krylov",
            Method::Analytic => "analytic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Krylov subspace dimension.
    pub m: usize,
    /// Target error of the propagated vector relative to its initial norm,
    /// accumulated over the whole grid.
    pub tol: f64,
    /// Step rejections allowed per step before giving up.
    pub max_rejections: usize,
    /// Accepted steps allowed over the whole grid.
    pub max_steps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { m: 30, tol: 1e-8, max_rejections: 40, max_steps: 2_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Solver {
    Dense,
    Krylov(KrylovOptions),
}

impl Solver {
    pub fn method(&self) -> Method {
        match self {
            Solver::Dense => Method::NumericDense,
            Solver::Krylov(_) => Method::NumericKrylov,
        }
    }
}

/// Vector indices closed under "j feeds i" starting from `seeds`.
fn forward_reachable(l: &CsrMatrix, seeds: &[usize]) -> Vec<bool> {
    let n = l.rows();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in l.row_entries(i) {
            if i != j {
                succ[j].push(i);
            }
        }
    }
    flood(n, seeds, |j| succ[j].clone())
}

/// Vector indices that feed, directly or not, one of `targets`.
fn backward_reachable(l: &CsrMatrix, targets: &[usize]) -> Vec<bool> {
    flood(l.rows(), targets, |i| l.row_entries(i).map(|(j, _)| j).collect())
}

fn flood(n: usize, seeds: &[usize], next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    for &s in seeds {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(j) = stack.pop() {
        for i in next(j) {
            if !seen[i] {
                seen[i] = true;
                stack.push(i);
            }
        }
    }
    seen
}

/// Generator and initial vector restricted to an invariant index set.
struct Restricted {
    keep: Vec<usize>,
    generator: CsrMatrix,
    x0: Vec<C64>,
    full_len: usize,
}

fn support(v: &[C64]) -> Vec<usize> {
    v.iter().enumerate().filter(|(_, x)| **x != ZERO).map(|(i, _)| i).collect()
}

fn restrict(l: &Liouvillian, rho0: &CMatrix, observed: Option<&[Vec<C64>]>) -> Result<Restricted> {
    let n = l.dim();
    if rho0.rows() != n || !rho0.is_square() {
        return Err(Error::DimensionMismatch { expected: n, found: rho0.rows() });
    }
    let sup = l.superoperator();
    let v0 = rho0.vec_col();
    let mut mask = forward_reachable(&sup, &support(&v0));
    if let Some(ws) = observed {
        let targets: Vec<usize> = ws.iter().flat_map(|w| support(w)).collect();
        let back = backward_reachable(&sup, &targets);
        for (m, b) in mask.iter_mut().zip(back) {
            *m &= b;
        }
    }
    let keep: Vec<usize> = (0..n * n).filter(|&i| mask[i]).collect();
    let generator = sup.restrict(&keep);
    let x0 = keep.iter().map(|&i| v0[i]).collect();
    Ok(Restricted { keep, generator, x0, full_len: n * n })
}

/// Calls `sink(i, x(t_i))` for every grid point.
fn evolve(r: &Restricted, grid: &TimeGrid, solver: &Solver, sink: &mut dyn FnMut(usize, &[C64])) -> Result<()> {
    if r.keep.is_empty() {
        for i in 0..grid.n_points {
            sink(i, &[]);
        }
        return Ok(());
    }
    match solver {
        Solver::Dense => evolve_dense(&r.generator.to_dense(), &r.x0, grid, sink),
        Solver::Krylov(opts) => evolve_krylov(&r.generator, &r.x0, grid, opts, sink),
    }
}

fn evolve_dense(gen: &CMatrix, x0: &[C64], grid: &TimeGrid, sink: &mut dyn FnMut(usize, &[C64])) -> Result<()> {
    let mut x = if grid.t0 > 0.0 { gen.scale_real(grid.t0).expm().matvec(x0) } else { x0.to_vec() };
    let step = gen.scale_real(grid.dt()).expm();
    let mut next = vec![ZERO; x.len()];
    for i in 0..grid.n_points {
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite state at t = {:e} s", grid.time(i))));
        }
        sink(i, &x);
        if i + 1 < grid.n_points {
            step.matvec_into(&x, &mut next);
            core::mem::swap(&mut x, &mut next);
        }
    }
    Ok(())
}

fn round_step(t: f64) -> f64 {
    let s = 10f64.powf(t.log10().floor() - 1.0);
    (t / s).ceil() * s
}

/// Adaptive Arnoldi propagation of x' = A x through the grid.
struct KrylovStepper<'a> {
    a: &'a CsrMatrix,
    m: usize,
    anorm: f64,
    /// Accepted local error per unit time.
    err_rate: f64,
    tol: f64,
    max_rejections: usize,
    steps_left: usize,
    t_new: f64,
    basis: Vec<Vec<C64>>,
    work: Vec<C64>,
}

impl<'a> KrylovStepper<'a> {
    fn new(a: &'a CsrMatrix, opts: &KrylovOptions, beta0: f64, span: f64) -> Result<Self> {
        if opts.m < 2 {
            return Err(Error::InvalidArgument(format!("Krylov dimension must be >= 2, got {}", opts.m)));
        }
        if !(opts.tol > 0.0 && opts.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("Krylov tolerance must be positive, got {}", opts.tol)));
        }
        let n = a.rows();
        let m = opts.m.min(n);
        let anorm = a.norm_inf().max(f64::MIN_POSITIVE);
        let mf = m as f64;
        let fact = ((mf + 1.0) / core::f64::consts::E).powf(mf + 1.0) * (2.0 * PI * (mf + 1.0)).sqrt();
        let t_new = round_step((1.0 / anorm) * ((fact * opts.tol) / (4.0 * anorm)).powf(1.0 / mf));
        Ok(Self {
            a,
            m,
            anorm,
            err_rate: opts.tol * beta0 / span,
            tol: opts.tol,
            max_rejections: opts.max_rejections,
            steps_left: opts.max_steps,
            t_new,
            basis: vec![vec![ZERO; n]; m + 1],
            work: vec![ZERO; n],
        })
    }

    /// Advances `w` by `duration`.
    fn advance(&mut self, w: &mut Vec<C64>, duration: f64) -> Result<()> {
        let n = w.len();
        let m = self.m;
        let mut t_now = 0.0;
        while t_now < duration {
            let beta = vec_norm(w);
            if beta == 0.0 {
                return Ok(());
            }
            if self.steps_left == 0 {
                return Err(Error::KrylovNotConverged { residual: f64::INFINITY, tol: self.tol });
            }
            self.steps_left -= 1;
            let mut t_step = (duration - t_now).min(self.t_new);
            let mut h = CMatrix::zeros(m + 2, m + 2);
            for (b, x) in self.basis[0].iter_mut().zip(w.iter()) {
                *b = x / beta;
            }
            let mut mb = m;
            let mut breakdown = false;
            for j in 0..m {
                self.a.matvec_into(&self.basis[j], &mut self.work);
                for i in 0..=j {
                    let hij: C64 = self.basis[i].iter().zip(&self.work).map(|(v, p)| v.conj() * p).sum();
                    h[(i, j)] = hij;
                    for (p, v) in self.work.iter_mut().zip(&self.basis[i]) {
                        *p -= hij * v;
                    }
                }
                let s = vec_norm(&self.work);
                if j + 1 == n || s <= 1e-13 * self.anorm {
                    breakdown = true;
                    mb = j + 1;
                    t_step = duration - t_now;
                    break;
                }
                h[(j + 1, j)] = C64::new(s, 0.0);
                for (v, p) in self.basis[j + 1].iter_mut().zip(&self.work) {
                    *v = p / s;
                }
            }
            let avnorm = if breakdown {
                0.0
            } else {
                h[(m + 1, m)] = C64::new(1.0, 0.0);
                self.a.matvec_into(&self.basis[m], &mut self.work);
                vec_norm(&self.work)
            };
            let mut rejections = 0;
            let (f, err_loc, xm) = loop {
                let mx = if breakdown { mb } else { m + 2 };
                let sub = CMatrix::from_fn(mx, mx, |i, j| h[(i, j)] * t_step);
                let f = sub.expm();
                if breakdown {
                    break (f, 0.0, 1.0 / m as f64);
                }
                let phi1 = (beta * f[(m, 0)]).norm();
                let phi2 = (beta * f[(m + 1, 0)] * avnorm).norm();
                let (err_loc, xm) = if phi1 > 10.0 * phi2 {
                    (phi2, 1.0 / m as f64)
                } else if phi1 > phi2 {
                    (phi1 * phi2 / (phi1 - phi2), 1.0 / m as f64)
                } else {
                    (phi1, 1.0 / (m as f64 - 1.0))
                };
                if !err_loc.is_finite() {
                    return Err(Error::KrylovNotConverged { residual: f64::INFINITY, tol: self.tol });
                }
                if err_loc <= self.err_rate * t_step {
                    break (f, err_loc, xm);
                }
                rejections += 1;
                if rejections > self.max_rejections {
                    return Err(Error::KrylovNotConverged { residual: err_loc / (beta * t_step) * (duration - t_now), tol: self.tol });
                }
                t_step = round_step(0.9 * t_step * (self.err_rate * t_step / err_loc).powf(xm));
            };
            let used = if breakdown { mb } else { m + 1 };
            for x in w.iter_mut() {
                *x = ZERO;
            }
            for k in 0..used {
                let c = f[(k, 0)] * beta;
                for (x, v) in w.iter_mut().zip(&self.basis[k]).take(n) {
                    *x += c * v;
                }
            }
            t_now += t_step;
            if !breakdown {
                let grow = if err_loc > 0.0 { (self.err_rate * t_step / err_loc).powf(xm) } else { 10.0 };
                self.t_new = round_step(0.9 * t_step * grow.min(10.0));
            }
        }
        Ok(())
    }
}

fn evolve_krylov(a: &CsrMatrix, x0: &[C64], grid: &TimeGrid, opts: &KrylovOptions, sink: &mut dyn FnMut(usize, &[C64])) -> Result<()> {
    let beta0 = vec_norm(x0);
    let mut stepper = KrylovStepper::new(a, opts, beta0.max(f64::MIN_POSITIVE), grid.t1)?;
    let mut w = x0.to_vec();
    if grid.t0 > 0.0 {
        stepper.advance(&mut w, grid.t0)?;
    }
    for i in 0..grid.n_points {
        sink(i, &w);
        if i + 1 < grid.n_points {
            stepper.advance(&mut w, grid.time(i + 1) - grid.time(i))?;
        }
    }
    Ok(())
}

fn scatter(r: &Restricted, x: &[C64], n: usize) -> CMatrix {
    let mut full = vec![ZERO; r.full_len];
    for (&k, &v) in r.keep.iter().zip(x) {
        full[k] = v;
    }
    CMatrix::from_vec_col(n, &full)
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub method: Method,
}

pub fn propagate(l: &Liouvillian, rho0: &CMatrix, grid: &TimeGrid, solver: &Solver) -> Result<Trajectory> {
    validate_density(rho0, 1e-9)?;
    let r = restrict(l, rho0, None)?;
    let n = l.dim();
    let mut states = Vec::with_capacity(grid.n_points);
    evolve(&r, grid, solver, &mut |_, x| states.push(scatter(&r, x, n)))?;
    Ok(Trajectory { times: grid.times(), states, method: solver.method() })
}

pub fn propagate_dense(l: &Liouvillian, rho0: &CMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    propagate(l, rho0, grid, &Solver::Dense)
}

pub fn propagate_krylov(l: &Liouvillian, rho0: &CMatrix, grid: &TimeGrid, opts: KrylovOptions) -> Result<Trajectory> {
    propagate(l, rho0, grid, &Solver::Krylov(opts))
}

/// Re Tr[O_k ρ(t_i)] for each observable, indexed `[k][i]`.
pub fn expectations(l: &Liouvillian, rho0: &CMatrix, grid: &TimeGrid, ops: &[CMatrix], solver: &Solver) -> Result<Vec<Vec<f64>>> {
    validate_density(rho0, 1e-9)?;
    let n = l.dim();
    // Tr[O ρ] = Σ_ij O_ji ρ_ij, and ρ_ij sits at vec index j·n + i.
    let weights: Vec<Vec<C64>> = ops
        .iter()
        .map(|o| {
            if o.rows() != n || !o.is_square() {
                return Err(Error::DimensionMismatch { expected: n, found: o.rows() });
            }
            Ok(o.transpose().vec_col())
        })
        .collect::<Result<_>>()?;
    let r = restrict(l, rho0, Some(&weights))?;
    let local: Vec<Vec<C64>> = weights.iter().map(|w| r.keep.iter().map(|&k| w[k]).collect()).collect();
    let mut out = vec![Vec::with_capacity(grid.n_points); ops.len()];
    evolve(&r, grid, solver, &mut |_, x| {
        for (o, w) in out.iter_mut().zip(&local) {
            o.push(w.iter().zip(x).map(|(a, b)| a * b).sum::<C64>().re);
        }
    })?;
    Ok(out)
}

pub fn validate_density(rho: &CMatrix, tol: f64) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::InvalidState("density matrix is not square".into()));
    }
    if !rho.is_hermitian(tol) {
        return Err(Error::InvalidState("density matrix is not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::InvalidState(format!("density matrix trace is {tr}")));
    }
    let min = rho.eigvalsh()[0];
    if min < -tol {
        return Err(Error::InvalidState(format!("density matrix has negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// |+1⟩⟨+1| on the NV (if present) ⊗ singlet on the electrons (if present) ⊗
/// maximally mixed nuclei ⊗ |E⟩⟨E|.
pub fn initial_state(register: &SpinRegister) -> Result<CMatrix> {
    let mut rho = register.identity();
    let mut mixed_dim = 1usize;
    let has_pair = register.contains(ELECTRON_1) && register.contains(ELECTRON_2);
    for site in register.sites() {
        let label = site.label.as_str();
        let factor = match (label, site.kind) {
            (NV, SiteKind::Spin(s)) => {
                let mut p = CMatrix::zeros(s.dim(), s.dim());
                p[(0, 0)] = C64::new(1.0, 0.0);
                register.embed(&p, NV)?
            }
            (CHARGE, SiteKind::ChargeFlag) => register.embed(&CMatrix::from_real_diag(&[1.0, 0.0]), CHARGE)?,
            (ELECTRON_1, _) if has_pair => register.embed_multi(&PairState::Singlet.projector(), &[ELECTRON_1, ELECTRON_2])?,
            (ELECTRON_2, _) if has_pair => continue,
            _ => {
                mixed_dim *= site.dim();
                continue;
            }
        };
        rho = rho.matmul(&factor);
    }
    if !register.contains(CHARGE) {
        return Err(Error::UnknownSite(CHARGE.into()));
    }
    Ok(rho.scale_real(1.0 / mixed_dim as f64))
}

/// Projectors whose expectations make up the sensor signal.
#[derive(Clone, Debug)]
pub struct SignalOperators {
    /// |+1⟩⟨+1| of the NV.
    pub bright: CMatrix,
    /// |E⟩⟨E| of the charge flag.
    pub charge_separated: CMatrix,
    /// |+1⟩⟨+1| ⊗ |E⟩⟨E|.
    pub bright_separated: CMatrix,
}

impl SignalOperators {
    pub fn new(register: &SpinRegister) -> Result<Self> {
        let nv_dim = register.site(NV)?.dim();
        let mut p1 = CMatrix::zeros(nv_dim, nv_dim);
        p1[(0, 0)] = C64::new(1.0, 0.0);
        let pe = CMatrix::from_real_diag(&[1.0, 0.0]);
        Ok(Self {
            bright: register.embed(&p1, NV)?,
            charge_separated: register.embed(&pe, CHARGE)?,
            bright_separated: register.embed_multi(&p1.kron(&pe), &[NV, CHARGE])?,
        })
    }

    pub fn as_array(&self) -> [CMatrix; 3] {
        [self.bright.clone(), self.charge_separated.clone(), self.bright_separated.clone()]
    }
}

/// P(t), charge populations and the E-branch contribution P^E(t).
#[derive(Clone, Debug, PartialEq)]
pub struct SignalTrace {
    pub times: Vec<f64>,
    pub p: Vec<f64>,
    pub p_e: Vec<f64>,
    pub p_g: Vec<f64>,
    pub p_branch_e: Vec<f64>,
    pub method: Method,
}

impl SignalTrace {
    fn from_parts(times: Vec<f64>, p: Vec<f64>, p_e: Vec<f64>, p_branch_e: Vec<f64>, method: Method) -> Self {
        let p_g = p_e.iter().map(|x| 1.0 - x).collect();
        Self { times, p, p_e, p_g, p_branch_e, method }
    }

    /// Every value in [0, 1] and P_E + P_G = 1, to `tol`.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let in_range = |v: &[f64]| v.iter().all(|x| *x >= -tol && *x <= 1.0 + tol);
        in_range(&self.p) && in_range(&self.p_e) && in_range(&self.p_g) && in_range(&self.p_branch_e)
            && self.p_e.iter().zip(&self.p_g).all(|(a, b)| (a + b - 1.0).abs() <= tol)
    }
}

pub fn observables(traj: &Trajectory, register: &SpinRegister) -> Result<SignalTrace> {
    let ops = SignalOperators::new(register)?;
    let ev = |o: &CMatrix| traj.states.iter().map(|r| o.matmul(r).trace().re).collect::<Vec<f64>>();
    Ok(SignalTrace::from_parts(
        traj.times.clone(),
        ev(&ops.bright),
        ev(&ops.charge_separated),
        ev(&ops.bright_separated),
        traj.method,
    ))
}

/// Signal computed on the reduced sector without forming full states.
pub fn signal(l: &Liouvillian, rho0: &CMatrix, grid: &TimeGrid, register: &SpinRegister, solver: &Solver) -> Result<SignalTrace> {
    let ops = SignalOperators::new(register)?;
    let mut ev = expectations(l, rho0, grid, &ops.as_array(), solver)?;
    let branch = ev.pop().unwrap_or_default();
    let p_e = ev.pop().unwrap_or_default();
    let p = ev.pop().unwrap_or_default();
    Ok(SignalTrace::from_parts(grid.times(), p, p_e, branch, solver.method()))
}

/// P_E(t) only; works for registers without an NV site.
pub fn charge_population(l: &Liouvillian, rho0: &CMatrix, grid: &TimeGrid, register: &SpinRegister, solver: &Solver) -> Result<Vec<f64>> {
    let pe = register.embed(&CMatrix::from_real_diag(&[1.0, 0.0]), CHARGE)?;
    Ok(expectations(l, rho0, grid, &[pe], solver)?.remove(0))
}
