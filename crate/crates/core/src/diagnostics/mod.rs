//! Energy functionals, exact energy identities, and the per-sample record
//! emitted along trajectories.
//!
//! Time derivatives of functionals are obtained from the Galerkin right-hand
//! side by the chain rule, so every identity check is algebraic rather than a
//! finite difference of samples.

mod certificate;
pub mod fit;
mod monitors;

pub use certificate::Certificate;
pub use monitors::{
    absorbing_fit, absorbing_certificate, h2_monitor, holder_time_estimate, integral_monitor, lipschitz_fit,
    strict_decrease, AbsorbingFit, HolderEstimate, LipschitzFit, WindowIntegral,
};

use serde::{Deserialize, Serialize};

use crate::dynamics::{Derivative, SystemState};
use crate::error::{Error, Result};
use crate::model::{Forcing, PhysParams};

/// Positive stand-in weights for constants that the estimates only assert
/// to exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    /// Weight of the second-order terms in `Υ₁`, `Υ₂`.
    pub kappa: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// Young-inequality parameter in `‖v‖² ≤ κ₄‖v‖⁴_{L⁴} + |Ω|/(4κ₄)`.
    pub kappa4: f64,
    /// Coefficient of `‖v_t‖²` in `Υ₂`.
    pub w_t: f64,
    /// Coefficient of `E₁` in `E₃`.
    pub w_e3: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            kappa1: 1.0,
            kappa2: 1.0,
            kappa3: 1.0,
            kappa4: 1.0,
            w_t: 1.0,
            w_e3: 1.0,
        }
    }
}

impl EnergyWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("kappa", self.kappa),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("kappa3", self.kappa3),
            ("kappa4", self.kappa4),
            ("w_t", self.w_t),
            ("w_E3", self.w_e3),
        ];
        for (name, w) in all {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidArgument(format!("weight {name} must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

/// One time sample of norms, functionals and identity residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2_v: f64,
    pub grad_v: f64,
    pub h2_v: f64,
    pub l4_v4: f64,
    pub l2_phi: f64,
    pub grad_phi: f64,
    pub hminus1_phi: f64,
    pub ups1: f64,
    pub ups2: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub res_phi_l2: f64,
    pub res_phi_h1: f64,
    pub res_v_l2: f64,
    /// `‖v_t‖`.
    pub nvt: f64,
    /// `‖φ_t‖`.
    pub nphit: f64,
    /// `‖v_t‖_{H¹}`.
    pub nvt_h1: f64,
    /// `dE₁/dt` by the chain rule.
    pub de1: f64,
}

impl DiagnosticsRecord {
    /// Column names of the CSV series, in order.
    pub const COLUMNS: [&'static str; 19] = [
        "t",
        "l2_v",
        "grad_v",
        "h2_v",
        "l4_v4",
        "l2_phi",
        "grad_phi",
        "hminus1_phi",
        "ups1",
        "ups2",
        "e1",
        "e2",
        "e3",
        "res_phi_l2",
        "res_phi_h1",
        "res_v_l2",
        "nvt",
        "nphit",
        "nvt_h1",
    ];

    pub fn columns(&self) -> [f64; 19] {
        [
            self.t,
            self.l2_v,
            self.grad_v,
            self.h2_v,
            self.l4_v4,
            self.l2_phi,
            self.grad_phi,
            self.hminus1_phi,
            self.ups1,
            self.ups2,
            self.e1,
            self.e2,
            self.e3,
            self.res_phi_l2,
            self.res_phi_h1,
            self.res_v_l2,
            self.nvt,
            self.nphit,
            self.nvt_h1,
        ]
    }

    /// Largest identity residual relative to `1 + E₂`.
    pub fn relative_residual(&self) -> f64 {
        self.res_phi_l2.max(self.res_phi_h1).max(self.res_v_l2) / (1.0 + self.e2)
    }

    pub fn h1_v_sq(&self) -> f64 {
        self.l2_v * self.l2_v + self.grad_v * self.grad_v
    }

    pub fn h1_phi_sq(&self) -> f64 {
        self.l2_phi * self.l2_phi + self.grad_phi * self.grad_phi
    }
}

/// The first-order energy `Υ₁`.
pub fn upsilon1(s: &SystemState, p: &PhysParams, w: &EnergyWeights) -> f64 {
    let nv = s.v.norms();
    p.c / (8.0 * p.m) * nv.grad.powi(2) + w.kappa * p.d_i / 2.0 * nv.grad.powi(2)
        + 0.5 * (p.d_i + p.inv_u_minus_a()) * nv.l2.powi(2)
        + p.b / 4.0 * s.v.l4_norm4()
        + 0.5 * s.phi.h1_sq()
}

pub fn upsilon2(s: &SystemState, d: &Derivative, p: &PhysParams, w: &EnergyWeights) -> f64 {
    let nv = s.v.norms();
    let k = w.kappa;
    k * p.c / (8.0 * p.m) * nv.lap.powi(2)
        + (p.c / (4.0 * p.m) + k * p.inv_u_minus_a()) * nv.grad.powi(2)
        + p.b * s.v.l4_norm4()
        + k * p.b * s.v.mixed_grad_sq_integral()
        + w.w_t * d.dv.l2_sq()
        + p.inv_u_minus_a() * nv.l2.powi(2)
        + p.gamma / 2.0 * s.phi.h1_sq()
}

pub fn e1(s: &SystemState, p: &PhysParams, w: &EnergyWeights) -> f64 {
    e1_from(s.v.l2_sq(), s.v.norms().grad.powi(2), s.v.l4_norm4(), s.phi.l2_sq(), s.phi.norms().grad.powi(2), p, w)
}

fn e1_from(l2v: f64, gv: f64, l4: f64, l2p: f64, gp: f64, p: &PhysParams, w: &EnergyWeights) -> f64 {
    0.5 * (w.kappa1 * p.d_i + p.inv_u_minus_a()) * l2v
        + p.c / (8.0 * p.m) * gv
        + p.b / 4.0 * l4
        + w.kappa2 / 2.0 * l2p
        + w.kappa3 / 2.0 * gp
}

pub fn e2(s: &SystemState) -> f64 {
    s.v.h1_sq() + s.v.l4_norm4() + s.phi.h1_sq()
}

pub fn e3(s: &SystemState, d: &Derivative, p: &PhysParams, w: &EnergyWeights) -> f64 {
    (p.d_i + p.d_r * p.d_r / p.d_i) * d.dv.l2_sq() + 2.0 * d.dphi.l2_sq() + w.w_e3 * e1(s, p, w)
}

/// `dE₁/dt` along the flow, using `d/dt ∫|v|⁴ = 4 Re (v_t, P(|v|²v))`.
pub fn e1_rate(s: &SystemState, d: &Derivative, p: &PhysParams, w: &EnergyWeights) -> f64 {
    let cubic = s.v.cubic_term();
    (w.kappa1 * p.d_i + p.inv_u_minus_a()) * d.dv.inner(&s.v).re
        + p.c / (4.0 * p.m) * d.dv.inner_grad(&s.v).re
        + p.b * d.dv.inner(&cubic).re
        + w.kappa2 * d.dphi.inner(&s.phi).re
        + w.kappa3 * d.dphi.inner_grad(&s.phi).re
}

/// The three exact energy identities, returned as absolute residuals
/// `(φ in L², ∇φ in L², v in L²)`.
pub fn identity_residuals(s: &SystemState, d: &Derivative, p: &PhysParams, forcing: &Forcing) -> (f64, f64, f64) {
    let (v, phi) = (&s.v, &s.phi);
    let gu = p.g / p.u;

    let r_phi = d.dphi.inner(phi).re + p.gamma * phi.l2_sq() - forcing.h.inner(phi).re + gu * v.inner(phi).im;

    let r_phi_grad = d.dphi.inner_grad(phi).re + p.gamma * phi.inner_grad(phi).re - forcing.h.inner_grad(phi).re
        + gu * v.inner_grad(phi).im;

    let vt_v = d.dv.inner(v);
    let nv = v.norms();
    let r_v = p.d_i * vt_v.re + p.d_r * vt_v.im + p.inv_u_minus_a() * nv.l2.powi(2)
        + p.c / (4.0 * p.m) * nv.grad.powi(2)
        + p.b * v.l4_norm4()
        - forcing.f.inner(v).im
        - gu * phi.inner(v).re;

    (r_phi.abs(), r_phi_grad.abs(), r_v.abs())
}

/// Evaluates every diagnostic at one sample.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub params: PhysParams,
    pub weights: EnergyWeights,
    pub forcing: Forcing,
}

impl Diagnostics {
    pub fn new(params: PhysParams, weights: EnergyWeights, forcing: Forcing) -> Result<Self> {
        weights.validate()?;
        forcing.check()?;
        Ok(Self {
            params,
            weights,
            forcing,
        })
    }

    pub fn record(&self, s: &SystemState, d: &Derivative) -> DiagnosticsRecord {
        let (p, w) = (&self.params, &self.weights);
        let nv = s.v.norms();
        let np = s.phi.norms();
        let l4 = s.v.l4_norm4();
        let (res_phi_l2, res_phi_h1, res_v_l2) = identity_residuals(s, d, p, &self.forcing);
        let e1 = e1_from(nv.l2.powi(2), nv.grad.powi(2), l4, np.l2.powi(2), np.grad.powi(2), p, w);
        let e2 = nv.h1.powi(2) + l4 + np.h1.powi(2);
        let ndv = d.dv.norms();
        let nvt2 = ndv.l2.powi(2);
        let nphit2 = d.dphi.l2_sq();
        DiagnosticsRecord {
            t: s.t,
            l2_v: nv.l2,
            grad_v: nv.grad,
            h2_v: nv.h2,
            l4_v4: l4,
            l2_phi: np.l2,
            grad_phi: np.grad,
            hminus1_phi: np.hminus1,
            ups1: upsilon1(s, p, w),
            ups2: upsilon2(s, d, p, w),
            e1,
            e2,
            e3: (p.d_i + p.d_r * p.d_r / p.d_i) * nvt2 + 2.0 * nphit2 + w.w_e3 * e1,
            res_phi_l2,
            res_phi_h1,
            res_v_l2,
            nvt: ndv.l2,
            nphit: nphit2.sqrt(),
            nvt_h1: ndv.h1,
            de1: e1_rate(s, d, p, w),
        }
    }
}
