//! Physical parameters, the box domain, forcing, and the change of variables
//! between the pair field `u` and the shifted field `v = u + g φ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Model coefficients. All quantities are dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// BCS coupling `U`.
    pub u: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Mass `m`.
    pub m: f64,
    /// Feshbach coupling `g`.
    pub g: f64,
    /// Threshold energy `ν`.
    pub nu: f64,
    /// Chemical potential `μ`.
    pub mu: f64,
    /// Damping rate `γ` of the boson field.
    pub gamma: f64,
    pub d_r: f64,
    pub d_i: f64,
}

impl Default for PhysParams {
    /// The benchmark parameter set used throughout the experiments.
    fn default() -> Self {
        Self {
            u: 1.0,
            a: 0.0,
            b: 1.0,
            c: 1.0,
            m: 0.25,
            g: 1.0,
            nu: 0.5,
            mu: 0.25,
            gamma: 0.5,
            d_r: 0.3,
            d_i: 1.0,
        }
    }
}

impl PhysParams {
    pub fn d(&self) -> Complex64 {
        Complex64::new(self.d_r, self.d_i)
    }

    pub fn abs_d(&self) -> f64 {
        self.d_r.hypot(self.d_i)
    }

    /// `1/d = conj(d)/|d|²`.
    pub fn inv_d(&self) -> Complex64 {
        let n = self.d_r * self.d_r + self.d_i * self.d_i;
        Complex64::new(self.d_r / n, -self.d_i / n)
    }

    /// `1/U − a`, positive for valid parameters.
    pub fn inv_u_minus_a(&self) -> f64 {
        1.0 / self.u - self.a
    }

    /// `g²/U + 2ν − 2μ`, the constant part of the boson frequency.
    pub fn detuning(&self) -> f64 {
        self.g * self.g / self.u + 2.0 * self.nu - 2.0 * self.mu
    }

    /// Frequency of the free boson mode with eigenvalue `lambda`.
    pub fn boson_frequency(&self, lambda: f64) -> f64 {
        self.detuning() + lambda / (4.0 * self.m)
    }

    /// Real part of the diffusion coefficient of the explicit `v` equation,
    /// `(c/4m)·d_i/|d|²`.
    pub fn parabolicity(&self) -> f64 {
        let n = self.d_r * self.d_r + self.d_i * self.d_i;
        self.c / (4.0 * self.m) * self.d_i / n
    }

    pub fn validate(&self) -> ValidityReport {
        validate_params(self)
    }

    /// Returns the params or an error listing every violated constraint.
    pub fn checked(self) -> Result<Self> {
        let report = validate_params(&self);
        if report.valid {
            Ok(self)
        } else {
            Err(Error::InvalidParams(report.violations.join("; ")))
        }
    }

    /// Like [`checked`](Self::checked) but also admits `b = 0`, the linear
    /// configuration used by the closed-form oracles.
    pub fn checked_allow_linear(self) -> Result<Self> {
        let report = validate_params(&self);
        let violations: Vec<String> = report
            .violations
            .into_iter()
            .filter(|v| !(self.b == 0.0 && v.starts_with("b > 0")))
            .collect();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(violations.join("; ")))
        }
    }
}

/// Outcome of [`validate_params`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub violations: Vec<String>,
    /// `1/U − a`.
    pub inv_u_minus_a: f64,
    /// `1/d`.
    pub inv_d: Complex64,
}

pub fn validate_params(p: &PhysParams) -> ValidityReport {
    let mut violations = Vec::new();
    let fields = [
        ("U", p.u),
        ("a", p.a),
        ("b", p.b),
        ("c", p.c),
        ("m", p.m),
        ("g", p.g),
        ("nu", p.nu),
        ("mu", p.mu),
        ("gamma", p.gamma),
        ("d_r", p.d_r),
        ("d_i", p.d_i),
    ];
    for (name, value) in fields {
        if !value.is_finite() {
            violations.push(format!("{name} must be finite"));
        }
    }
    if !(p.u > 0.0) {
        violations.push("U > 0 violated".to_string());
    }
    if !(p.b > 0.0) {
        violations.push("b > 0 violated".to_string());
    }
    if !(p.c > 0.0) {
        violations.push("c > 0 violated".to_string());
    }
    if !(p.m > 0.0) {
        violations.push("m > 0 violated".to_string());
    }
    if !(p.gamma > 0.0) {
        violations.push("gamma > 0 violated".to_string());
    }
    if !(p.a * p.u < 1.0) {
        violations.push("aU < 1 violated".to_string());
    }
    if !(p.d_i > 0.0) {
        violations.push("d_i > 0 violated".to_string());
    }
    let (inv_u_minus_a, inv_d) = if p.u != 0.0 && p.abs_d() > 0.0 {
        (p.inv_u_minus_a(), p.inv_d())
    } else {
        (f64::NAN, Complex64::new(f64::NAN, f64::NAN))
    };
    ValidityReport {
        valid: violations.is_empty(),
        violations,
        inv_u_minus_a,
        inv_d,
    }
}

/// A rectangular box `(0, L₁) × … ` in one or two dimensions with homogeneous
/// Dirichlet conditions.
///
/// `modes[k]` is the number of sine modes kept along axis `k`; `grid[k]` is the
/// number of quadrature intervals, so the axis carries `grid[k] − 1` interior
/// nodes at spacing `lengths[k] / grid[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lengths: Vec<f64>,
    pub modes: Vec<usize>,
    pub grid: Vec<usize>,
}

impl BoxDomain {
    pub fn interval(length: f64, modes: usize, grid: usize) -> Result<Self> {
        Self::new(vec![length], vec![modes], vec![grid])
    }

    pub fn rectangle(lengths: [f64; 2], modes: [usize; 2], grid: [usize; 2]) -> Result<Self> {
        Self::new(lengths.to_vec(), modes.to_vec(), grid.to_vec())
    }

    pub fn new(lengths: Vec<f64>, modes: Vec<usize>, grid: Vec<usize>) -> Result<Self> {
        let dom = Self {
            lengths,
            modes,
            grid,
        };
        dom.validate()?;
        Ok(dom)
    }

    /// Interval `(0, π)` with `modes` modes and a `4·modes` grid.
    pub fn default_interval(modes: usize) -> Self {
        Self {
            lengths: vec![PI],
            modes: vec![modes],
            grid: vec![4 * modes],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.lengths.len();
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidDomain(format!("dimension must be 1 or 2, got {dim}")));
        }
        if self.modes.len() != dim || self.grid.len() != dim {
            return Err(Error::InvalidDomain(
                "lengths, modes and grid must have one entry per axis".into(),
            ));
        }
        for k in 0..dim {
            let l = self.lengths[k];
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidDomain(format!("axis {k}: length must be positive")));
            }
            if self.modes[k] == 0 {
                return Err(Error::InvalidDomain(format!("axis {k}: need at least one mode")));
            }
            if self.grid[k] < 4 * self.modes[k] {
                return Err(Error::InvalidDomain(format!(
                    "axis {k}: grid {} below 4 x modes = {}",
                    self.grid[k],
                    4 * self.modes[k]
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    /// Number of active (tensor) modes.
    pub fn mode_count(&self) -> usize {
        self.modes.iter().product()
    }

    /// `|Ω|`.
    pub fn measure(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Same box and grid ratio with a different number of modes per axis.
    pub fn with_modes(&self, modes: &[usize]) -> Result<Self> {
        let ratio: Vec<usize> = self
            .grid
            .iter()
            .zip(&self.modes)
            .map(|(n, l)| n.div_ceil(*l).max(4))
            .collect();
        Self::new(
            self.lengths.clone(),
            modes.to_vec(),
            modes.iter().zip(&ratio).map(|(l, r)| l * r).collect(),
        )
    }
}

/// Time-independent forces on the `v` and `φ` equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub f: SpectralField,
    pub h: SpectralField,
}

impl Forcing {
    pub fn zero(like: &SpectralField) -> Self {
        Self {
            f: like.zeros_like(),
            h: like.zeros_like(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_zero() && self.h.is_zero()
    }

    pub fn check(&self) -> Result<()> {
        self.f.check_finite("forcing f")?;
        self.h.check_finite("forcing h")?;
        if !self.f.same_domain(&self.h) {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }
}

/// `u = v − g φ`; `φ` is returned unchanged.
pub fn to_original_variables(
    v: &SpectralField,
    phi: &SpectralField,
    g: f64,
) -> Result<(SpectralField, SpectralField)> {
    let u = v.axpy(-g, phi)?;
    Ok((u, phi.clone()))
}

/// `v = u + g φ`; inverse of [`to_original_variables`].
pub fn from_original_variables(
    u: &SpectralField,
    phi: &SpectralField,
    g: f64,
) -> Result<(SpectralField, SpectralField)> {
    let v = u.axpy(g, phi)?;
    Ok((v, phi.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Basis;

    fn p0() -> PhysParams {
        PhysParams {
            u: 1.0,
            a: 0.0,
            b: 1.0,
            c: 1.0,
            m: 0.25,
            g: 1.0,
            nu: 0.5,
            mu: 0.25,
            gamma: 0.5,
            d_r: 0.0,
            d_i: 1.0,
        }
    }

    #[test]
    fn reference_params_are_valid() {
        let r = validate_params(&p0());
        assert!(r.valid, "{:?}", r.violations);
        assert_eq!(r.inv_u_minus_a, 1.0);
        assert!((r.inv_d - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(PhysParams::default().validate().valid);
    }

    #[test]
    fn au_at_least_one_is_rejected() {
        let p = PhysParams { a: 2.0, ..p0() };
        let r = validate_params(&p);
        assert!(!r.valid);
        assert!(r.violations.iter().any(|v| v.contains("aU < 1")));
    }

    #[test]
    fn vanishing_d_i_is_rejected() {
        let p = PhysParams { d_i: 0.0, ..p0() };
        let r = validate_params(&p);
        assert!(!r.valid);
        assert!(r.violations.iter().any(|v| v.contains("d_i")));
        assert!(p.checked().is_err());
    }

    #[test]
    fn linear_configuration_is_admitted_only_where_asked() {
        let p = PhysParams { b: 0.0, ..p0() };
        assert!(p.checked().is_err());
        assert!(p.checked_allow_linear().is_ok());
        assert!(PhysParams { b: -1.0, ..p0() }.checked_allow_linear().is_err());
        assert!(PhysParams { b: 0.0, gamma: 0.0, ..p0() }.checked_allow_linear().is_err());
    }

    #[test]
    fn every_positivity_constraint_is_reported() {
        let p = PhysParams {
            u: -1.0,
            b: 0.0,
            c: -2.0,
            m: 0.0,
            gamma: 0.0,
            ..p0()
        };
        let r = validate_params(&p);
        for key in ["U > 0", "b > 0", "c > 0", "m > 0", "gamma > 0"] {
            assert!(r.violations.iter().any(|v| v.contains(key)), "missing {key}");
        }
    }

    #[test]
    fn explicit_v_equation_is_parabolic() {
        for (d_r, d_i) in [(0.0, 1.0), (0.3, 1.0), (-5.0, 0.1), (2.0, 3.0)] {
            let p = PhysParams { d_r, d_i, ..p0() };
            let coeff = Complex64::new(0.0, -p.c / (4.0 * p.m)) * p.inv_d();
            // dv/dt ∋ (1/d)(ic/4m)Δv, so the diffusion coefficient is −Re of the −λ factor.
            assert!((-coeff.re - p.parabolicity()).abs() < 1e-14);
            assert!(p.parabolicity() > 0.0);
        }
    }

    #[test]
    fn domain_requires_dealiasing_headroom() {
        assert!(BoxDomain::interval(PI, 16, 63).is_err());
        assert!(BoxDomain::interval(PI, 16, 64).is_ok());
        assert!(BoxDomain::interval(0.0, 16, 64).is_err());
        assert!(BoxDomain::new(vec![1.0; 3], vec![2; 3], vec![8; 3]).is_err());
        let d = BoxDomain::rectangle([1.0, 2.0], [3, 4], [12, 16]).unwrap();
        assert_eq!(d.mode_count(), 12);
        assert_eq!(d.measure(), 2.0);
    }

    #[test]
    fn variable_change_identities() {
        let basis = Basis::new(BoxDomain::default_interval(8)).unwrap();
        let phi = basis.field_from_fn(|m| {
            let j = m.index[0] as f64;
            Complex64::new(j, 1.0 / j)
        });
        let v = basis.field_from_fn(|m| Complex64::new(0.5, -(m.index[0] as f64)));

        let (u, phi2) = to_original_variables(&v, &phi, 0.0).unwrap();
        assert_eq!(u, v);
        assert_eq!(phi2, phi);

        let gphi = phi.scaled(Complex64::new(1.7, 0.0));
        let (u, _) = to_original_variables(&gphi, &phi, 1.7).unwrap();
        assert!(u.coeffs().iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn variable_change_rejects_foreign_domain() {
        let a = Basis::new(BoxDomain::default_interval(8)).unwrap();
        let b = Basis::new(BoxDomain::default_interval(4)).unwrap();
        let err = to_original_variables(&a.zeros(), &b.zeros(), 1.0).unwrap_err();
        assert!(matches!(err, Error::DomainMismatch));
    }
}
