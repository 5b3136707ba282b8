//! Galerkin right-hand side, the per-mode linear block, and a second-order
//! exponential time-differencing integrator.
//!
//! The Galerkin system for the coefficients `(v_j, φ_j)` reads
//!
//! ```text
//! dv_j/dt = A11 v_j + A12 φ_j + (1/d)(−i b P(|v|²v)_j + f_j)
//! dφ_j/dt = A21 v_j + A22 φ_j + h_j
//! ```
//!
//! with the 2×2 block `A` from [`linear_block`]. The block is integrated
//! exactly; only the cubic term and the sources are approximated in time.

use std::sync::Arc;

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Forcing, PhysParams};
use crate::spectral::{Basis, SpectralField};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default upper bound on `‖v‖_{H¹} + ‖φ‖_{H¹}` before a step is rejected.
pub const DEFAULT_GUARD: f64 = 1e6;
/// Default time step.
pub const DEFAULT_DT: f64 = 1e-3;

/// The pair `(v, φ)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub v: SpectralField,
    pub phi: SpectralField,
    pub t: f64,
}

impl SystemState {
    pub fn new(v: SpectralField, phi: SpectralField, t: f64) -> Result<Self> {
        if !v.same_domain(&phi) {
            return Err(Error::DomainMismatch);
        }
        if !t.is_finite() {
            return Err(Error::NonFinite("time"));
        }
        v.check_finite("v")?;
        phi.check_finite("phi")?;
        Ok(Self { v, phi, t })
    }

    pub fn zeros(basis: &Arc<Basis>, t: f64) -> Self {
        Self {
            v: basis.zeros(),
            phi: basis.zeros(),
            t,
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        self.v.basis()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.v.is_finite() && self.phi.is_finite()
    }

    /// `‖v‖_{H¹} + ‖φ‖_{H¹}`, the quantity watched by the blow-up guard.
    pub fn guard_norm(&self) -> f64 {
        self.v.h1_sq().sqrt() + self.phi.h1_sq().sqrt()
    }

    /// `sqrt(‖v‖²_{H¹} + ‖φ‖²_{H¹})`.
    pub fn h1_pair(&self) -> f64 {
        (self.v.h1_sq() + self.phi.h1_sq()).sqrt()
    }

    pub fn h2_pair(&self) -> f64 {
        (self.v.h2_sq() + self.phi.h2_sq()).sqrt()
    }

    pub fn difference(&self, other: &Self) -> Result<(SpectralField, SpectralField)> {
        Ok((self.v.sub(&other.v)?, self.phi.sub(&other.phi)?))
    }
}

/// Time derivatives `(v_t, φ_t)` at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub dv: SpectralField,
    pub dphi: SpectralField,
}

/// Complex 2×2 matrix stored row-major.
pub type Mat2 = [[Complex64; 2]; 2];

fn mat_vec(m: &Mat2, x: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0] * x[0] + m[0][1] * x[1],
        m[1][0] * x[0] + m[1][1] * x[1],
    ]
}

/// The linear part of the Galerkin system on one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearBlock {
    pub a: Mat2,
}

/// `A_j` for the mode with eigenvalue `lambda`.
pub fn linear_block(p: &PhysParams, lambda: f64) -> LinearBlock {
    let inv_d = p.inv_d();
    let a11 = (I * (p.a - 1.0 / p.u) - I * (p.c / (4.0 * p.m) * lambda)) * inv_d;
    let a12 = I * (p.g / p.u) * inv_d;
    let a21 = I * (p.g / p.u);
    let a22 = Complex64::new(-p.gamma, -p.boson_frequency(lambda));
    LinearBlock {
        a: [[a11, a12], [a21, a22]],
    }
}

impl LinearBlock {
    pub fn apply(&self, x: [Complex64; 2]) -> [Complex64; 2] {
        mat_vec(&self.a, x)
    }

    pub fn trace(&self) -> Complex64 {
        self.a[0][0] + self.a[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    /// The two eigenvalues `m ± q`.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let m = self.trace() * 0.5;
        let q = self.half_gap();
        [m + q, m - q]
    }

    /// `q` with `q² = ((a11 − a22)/2)² + a12·a21`.
    fn half_gap(&self) -> Complex64 {
        let half = (self.a[0][0] - self.a[1][1]) * 0.5;
        (half * half + self.a[0][1] * self.a[1][0]).sqrt()
    }

    /// Upper-triangular part used for the stable half of a difference
    /// splitting: the boson row loses its feedback from `v`.
    pub fn stable_part(&self) -> Self {
        let mut a = self.a;
        a[1][0] = ZERO;
        Self { a }
    }

    /// `exp(t·A)` in closed form.
    ///
    /// Writing `A = m I + (A − m I)` with `(A − m I)² = q² I`,
    /// `exp(tA) = e^{tm} [cosh(tq) I + t·sinhc(tq)(A − m I)]`, which stays
    /// finite in the defective limit `q → 0`.
    pub fn exp(&self, t: f64) -> Mat2 {
        if t == 0.0 {
            return [[ONE, ZERO], [ZERO, ONE]];
        }
        let m = self.trace() * 0.5;
        let q = self.half_gap();
        let z = q * t;
        let (c, s) = if z.norm() < 0.5 {
            let e = (m * t).exp();
            let z2 = z * z;
            // Taylor series of cosh and sinh(z)/z to well below roundoff.
            let mut cosh = ONE;
            let mut sinhc = ONE;
            let mut term_c = ONE;
            let mut term_s = ONE;
            for k in 1..12 {
                let k = k as f64;
                term_c *= z2 / ((2.0 * k - 1.0) * (2.0 * k));
                term_s *= z2 / ((2.0 * k) * (2.0 * k + 1.0));
                cosh += term_c;
                sinhc += term_s;
            }
            (e * cosh, e * sinhc * t)
        } else {
            let ep = ((m + q) * t).exp();
            let em = ((m - q) * t).exp();
            ((ep + em) * 0.5, (ep - em) / (q * 2.0))
        };
        let mut out = [[ZERO; 2]; 2];
        for r in 0..2 {
            for k in 0..2 {
                let shift = if r == k { m } else { ZERO };
                out[r][k] = s * (self.a[r][k] - shift);
            }
            out[r][r] += c;
        }
        out
    }
}

/// `exp(dt·A)·x` for one mode.
pub fn linear_exact_step(block: &LinearBlock, x: [Complex64; 2], dt: f64) -> Result<[Complex64; 2]> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be finite and nonnegative, got {dt}")));
    }
    Ok(mat_vec(&block.exp(dt), x))
}

/// Applies the exact linear flow to every mode of a state.
pub fn linear_flow(p: &PhysParams, s: &SystemState, t: f64) -> Result<SystemState> {
    linear_flow_with(s, t, |lambda| linear_block(p, lambda))
}

/// Exact flow of an arbitrary per-mode block family.
pub fn linear_flow_with(
    s: &SystemState,
    t: f64,
    block: impl Fn(f64) -> LinearBlock,
) -> Result<SystemState> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("flow time must be nonnegative, got {t}")));
    }
    let basis = s.basis();
    let mut v = s.v.clone();
    let mut phi = s.phi.clone();
    for (k, m) in basis.modes().iter().enumerate() {
        let e = block(m.lambda).exp(t);
        let y = mat_vec(&e, [s.v.coeffs()[k], s.phi.coeffs()[k]]);
        v.coeffs_mut()[k] = y[0];
        phi.coeffs_mut()[k] = y[1];
    }
    Ok(SystemState { v, phi, t: s.t + t })
}

/// Time-dependent right-hand sides `(f(t), h(t))` in coefficient form.
pub trait Source: Send + Sync {
    /// Writes the source coefficients at time `t`.
    fn eval(&self, t: f64, f: &mut [Complex64], h: &mut [Complex64]);
}

impl Source for Forcing {
    fn eval(&self, _t: f64, f: &mut [Complex64], h: &mut [Complex64]) {
        f.copy_from_slice(self.f.coeffs());
        h.copy_from_slice(self.h.coeffs());
    }
}

impl<S: Source + ?Sized> Source for &S {
    fn eval(&self, t: f64, f: &mut [Complex64], h: &mut [Complex64]) {
        (**self).eval(t, f, h)
    }
}

/// Galerkin right-hand side.
pub fn rhs(s: &SystemState, p: &PhysParams, forcing: &Forcing) -> Result<Derivative> {
    let p = p.checked_allow_linear()?;
    forcing.check()?;
    if !s.v.same_domain(&forcing.f) {
        return Err(Error::DomainMismatch);
    }
    Ok(Integrator::new(p, forcing)?.rhs(s))
}

/// One ETD2RK step with freshly computed coefficients.
pub fn step(s: &SystemState, p: &PhysParams, forcing: &Forcing, dt: f64) -> Result<SystemState> {
    let mut integ = Integrator::new(*p, forcing)?;
    integ.step(s, dt)
}

/// Per-mode exponential integrator coefficients for one step size.
#[derive(Debug, Clone, Copy)]
struct EtdCoeffs {
    e: Mat2,
    phi1: Mat2,
    phi2: Mat2,
}

impl EtdCoeffs {
    /// `exp(hA)`, `φ₁(hA)`, `φ₂(hA)` from the exponential of the augmented
    /// 6×6 matrix `[[hA, I, 0], [0, 0, I], [0, 0, 0]]`.
    fn new(block: &LinearBlock, h: f64) -> Self {
        let mut m = SMatrix::<Complex64, 6, 6>::zeros();
        for r in 0..2 {
            for c in 0..2 {
                m[(r, c)] = block.a[r][c] * h;
            }
            m[(r, r + 2)] = ONE;
            m[(r + 2, r + 4)] = ONE;
        }
        let x = m.exp();
        let pick = |off: usize| -> Mat2 {
            [
                [x[(0, off)], x[(0, off + 1)]],
                [x[(1, off)], x[(1, off + 1)]],
            ]
        };
        Self {
            e: pick(0),
            phi1: pick(2),
            phi2: pick(4),
        }
    }
}

/// How [`Integrator::integrate`] samples and guards a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub dt: f64,
    /// The observer sees every `sample_stride`-th step and the final state.
    pub sample_stride: usize,
    pub guard: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            sample_stride: 10,
            guard: DEFAULT_GUARD,
        }
    }
}

/// Reusable stepping context for one parameter set, basis, and source.
pub struct Integrator<S: Source = Forcing> {
    params: PhysParams,
    basis: Arc<Basis>,
    source: S,
    blocks: Vec<LinearBlock>,
    inv_d: Complex64,
    guard: f64,
    cache: Vec<(f64, Arc<Vec<EtdCoeffs>>)>,
}

impl Integrator<Forcing> {
    pub fn new(params: PhysParams, forcing: &Forcing) -> Result<Self> {
        forcing.check()?;
        let basis = Arc::clone(forcing.f.basis());
        Self::with_source(params, basis, forcing.clone())
    }
}

impl<S: Source> Integrator<S> {
    pub fn with_source(params: PhysParams, basis: Arc<Basis>, source: S) -> Result<Self> {
        let params = params.checked_allow_linear()?;
        let blocks = basis.lambdas().map(|l| linear_block(&params, l)).collect();
        Ok(Self {
            inv_d: params.inv_d(),
            params,
            basis,
            source,
            blocks,
            guard: DEFAULT_GUARD,
            cache: Vec::new(),
        })
    }

    pub fn set_guard(&mut self, guard: f64) {
        self.guard = guard;
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn blocks(&self) -> &[LinearBlock] {
        &self.blocks
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    fn check_state(&self, s: &SystemState) -> Result<()> {
        if !(std::ptr::eq(Arc::as_ptr(s.basis()), Arc::as_ptr(&self.basis))
            || s.basis().domain() == self.basis.domain())
        {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }

    /// Nonlinear and source part: `((1/d)(−i b P(|v|²v) + f(t)), h(t))`.
    fn nonlinear(&self, v: &[Complex64], t: f64, nv: &mut [Complex64], nphi: &mut [Complex64]) {
        let n = v.len();
        let mut f = vec![ZERO; n];
        self.source.eval(t, &mut f, nphi);
        if self.params.b != 0.0 {
            self.basis.cubic_into(v, nv);
        } else {
            nv.fill(ZERO);
        }
        let ib = I * self.params.b;
        for (o, fj) in nv.iter_mut().zip(&f) {
            *o = (-ib * *o + fj) * self.inv_d;
        }
    }

    /// `(v_t, φ_t)` at the given state.
    pub fn rhs(&self, s: &SystemState) -> Derivative {
        let n = self.basis.len();
        let mut dv = vec![ZERO; n];
        let mut dphi = vec![ZERO; n];
        self.nonlinear(s.v.coeffs(), s.t, &mut dv, &mut dphi);
        for k in 0..n {
            let y = self.blocks[k].apply([s.v.coeffs()[k], s.phi.coeffs()[k]]);
            dv[k] += y[0];
            dphi[k] += y[1];
        }
        Derivative {
            dv: s.v.with_coeffs(dv),
            dphi: s.phi.with_coeffs(dphi),
        }
    }

    fn coeffs_for(&mut self, h: f64) -> Arc<Vec<EtdCoeffs>> {
        if let Some((_, c)) = self.cache.iter().find(|(hh, _)| *hh == h) {
            return Arc::clone(c);
        }
        let c = Arc::new(self.blocks.iter().map(|b| EtdCoeffs::new(b, h)).collect::<Vec<_>>());
        if self.cache.len() >= 4 {
            self.cache.remove(0);
        }
        self.cache.push((h, Arc::clone(&c)));
        c
    }

    /// One ETD2RK (Cox–Matthews) step of size `dt`.
    pub fn step(&mut self, s: &SystemState, dt: f64) -> Result<SystemState> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        self.check_state(s)?;
        if !s.is_finite() {
            return Err(Error::BlowUp {
                t: s.t,
                reason: "non-finite state".into(),
            });
        }
        let coeffs = self.coeffs_for(dt);
        let n = self.basis.len();
        let (v0, p0) = (s.v.coeffs(), s.phi.coeffs());

        let mut nv0 = vec![ZERO; n];
        let mut np0 = vec![ZERO; n];
        self.nonlinear(v0, s.t, &mut nv0, &mut np0);

        let mut va = vec![ZERO; n];
        let mut pa = vec![ZERO; n];
        for k in 0..n {
            let c = &coeffs[k];
            let lin = mat_vec(&c.e, [v0[k], p0[k]]);
            let src = mat_vec(&c.phi1, [nv0[k], np0[k]]);
            va[k] = lin[0] + src[0] * dt;
            pa[k] = lin[1] + src[1] * dt;
        }

        let t1 = s.t + dt;
        let mut nv1 = vec![ZERO; n];
        let mut np1 = vec![ZERO; n];
        self.nonlinear(&va, t1, &mut nv1, &mut np1);
        for k in 0..n {
            let corr = mat_vec(&coeffs[k].phi2, [nv1[k] - nv0[k], np1[k] - np0[k]]);
            va[k] += corr[0] * dt;
            pa[k] += corr[1] * dt;
        }

        let next = SystemState {
            v: s.v.with_coeffs(va),
            phi: s.phi.with_coeffs(pa),
            t: t1,
        };
        self.guard_check(&next)?;
        Ok(next)
    }

    fn guard_check(&self, s: &SystemState) -> Result<()> {
        if !s.is_finite() {
            return Err(Error::BlowUp {
                t: s.t,
                reason: "non-finite coefficients".into(),
            });
        }
        let g = s.guard_norm();
        if !(g <= self.guard) {
            return Err(Error::BlowUp {
                t: s.t,
                reason: format!("H1 norm {g:.3e} exceeds guard {:.3e}", self.guard),
            });
        }
        Ok(())
    }

    /// Advances `s0` by a duration `horizon`, landing exactly on
    /// `s0.t + horizon` with a final partial step. The observer sees the
    /// initial state, every `sample_stride`-th step, and the final state,
    /// each together with its exact right-hand side.
    pub fn integrate(
        &mut self,
        s0: &SystemState,
        horizon: f64,
        opts: &RunOptions,
        mut observer: impl FnMut(&SystemState, &Derivative),
    ) -> Result<SystemState> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon must be nonnegative, got {horizon}")));
        }
        if !(opts.dt > 0.0) || !opts.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", opts.dt)));
        }
        if opts.sample_stride == 0 {
            return Err(Error::InvalidArgument("sample_stride must be at least 1".into()));
        }
        self.check_state(s0)?;
        self.guard = opts.guard;
        self.guard_check(s0)?;

        let (full, rem) = split_horizon(horizon, opts.dt);
        let t0 = s0.t;
        let mut s = s0.clone();
        observer(&s, &self.rhs(&s));
        for k in 1..=full {
            let mut next = self.step(&s, opts.dt)?;
            // Keep sample times free of accumulated rounding.
            next.t = t0 + k as f64 * opts.dt;
            s = next;
            if k % opts.sample_stride == 0 || (k == full && rem == 0.0) {
                observer(&s, &self.rhs(&s));
            }
        }
        if rem > 0.0 {
            let mut next = self.step(&s, rem)?;
            next.t = t0 + horizon;
            s = next;
            observer(&s, &self.rhs(&s));
        }
        Ok(s)
    }
}

/// Number of full steps and the length of the trailing partial step.
pub fn split_horizon(horizon: f64, dt: f64) -> (usize, f64) {
    let ratio = horizon / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        return (nearest as usize, 0.0);
    }
    let full = ratio.floor() as usize;
    let rem = horizon - full as f64 * dt;
    (full, if rem > 0.0 { rem } else { 0.0 })
}

/// Times at which [`Integrator::integrate`] calls its observer.
pub fn sample_times(t0: f64, horizon: f64, opts: &RunOptions) -> Vec<f64> {
    let (full, rem) = split_horizon(horizon, opts.dt);
    let mut out = vec![t0];
    for k in 1..=full {
        if k % opts.sample_stride == 0 || (k == full && rem == 0.0) {
            out.push(t0 + k as f64 * opts.dt);
        }
    }
    if rem > 0.0 {
        out.push(t0 + horizon);
    }
    out
}
