//! Deterministic initial data, forcing, and the manufactured test problem.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ForcingConfig, InitialConfig, ModeAmplitude};
use crate::dynamics::{linear_block, Source, SystemState};
use crate::error::{Error, Result};
use crate::model::{Forcing, PhysParams};
use crate::spectral::{Basis, SpectralField};

/// Seeded pair `(v₀, φ₀)` with random phases, moduli `λ_j^{−decay}`, scaled
/// so that `sqrt(‖v₀‖²_{H¹} + ‖φ₀‖²_{H¹}) = radius`. A zero radius yields
/// zero fields.
pub fn seeded_initial_data(basis: &Arc<Basis>, radius: f64, decay: f64, seed: u64) -> Result<(SpectralField, SpectralField)> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be nonnegative, got {radius}")));
    }
    if !decay.is_finite() {
        return Err(Error::InvalidArgument(format!("decay exponent must be finite, got {decay}")));
    }
    if radius == 0.0 {
        return Ok((basis.zeros(), basis.zeros()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |basis: &Arc<Basis>| {
        basis.field_from_fn(|m| Complex64::from_polar(m.lambda.powf(-decay), TAU * rng.gen::<f64>()))
    };
    let v = draw(basis);
    let phi = draw(basis);
    let scale = Complex64::new(radius / (v.h1_sq() + phi.h1_sq()).sqrt(), 0.0);
    Ok((v.scaled(scale), phi.scaled(scale)))
}

fn from_modes(basis: &Arc<Basis>, list: &[ModeAmplitude]) -> Result<SpectralField> {
    let mut out = basis.zeros();
    for m in list {
        let pos = basis.position_of(m.index).ok_or_else(|| {
            Error::InvalidArgument(format!("mode {}x{} is not retained", m.index[0], m.index[1]))
        })?;
        out.coeffs_mut()[pos] = m.value;
    }
    Ok(out)
}

/// Forcing described by mode lists.
pub fn build_forcing(basis: &Arc<Basis>, desc: &ForcingConfig) -> Result<Forcing> {
    Ok(Forcing {
        f: from_modes(basis, &desc.f)?,
        h: from_modes(basis, &desc.h)?,
    })
}

/// Product Gaussian centred at `center` projected onto `basis`.
pub fn gaussian_bump(basis: &Arc<Basis>, center: &[f64], width: f64, amplitude: f64) -> Result<SpectralField> {
    let dom = basis.domain();
    if center.len() != dom.dim() {
        return Err(Error::InvalidArgument("bump center needs one coordinate per axis".into()));
    }
    let res: Vec<usize> = dom.grid.iter().map(|&n| n.max(256)).collect();
    let two_w2 = 2.0 * width * width;
    basis.project(
        |x| {
            let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
            Complex64::new(amplitude * (-r2 / two_w2).exp(), 0.0)
        },
        &res,
    )
}

/// Initial state at `t = 0` described by `desc`.
pub fn build_initial(basis: &Arc<Basis>, desc: &InitialConfig, seed: u64) -> Result<SystemState> {
    let (v, phi) = match desc {
        InitialConfig::Zero => (basis.zeros(), basis.zeros()),
        InitialConfig::Modes { v, phi } => (from_modes(basis, v)?, from_modes(basis, phi)?),
        InitialConfig::Seeded { radius, decay } => seeded_initial_data(basis, *radius, *decay, seed)?,
        InitialConfig::Bump {
            center,
            width,
            amplitude,
        } => {
            let b = gaussian_bump(basis, center, *width, *amplitude)?;
            (b.clone(), b)
        }
    };
    SystemState::new(v, phi, 0.0)
}

/// Sources that make `v(t) = φ(t) = e^{−t} e₁` an exact solution of the
/// Galerkin system, with `e₁` the lowest normalized eigenfunction.
pub struct ManufacturedSource {
    basis: Arc<Basis>,
    /// Coefficients of `f` and `h` at `t = 0` split by their time factor:
    /// `f(t) = e^{−t} f_lin + e^{−3t} f_cub`, `h(t) = e^{−t} h_lin`.
    f_lin: Complex64,
    f_cub: Vec<Complex64>,
    h_lin: Complex64,
}

impl ManufacturedSource {
    pub fn new(params: &PhysParams, basis: &Arc<Basis>) -> Result<Self> {
        let p = params.checked_allow_linear()?;
        let a = linear_block(&p, basis.modes()[0].lambda).a;
        let d = p.d();
        // v* = φ* = e^{−t}e₁, so v*' = φ*' = −e^{−t}e₁.
        let f_lin = d * (-1.0 - a[0][0] - a[0][1]);
        let h_lin = Complex64::new(-1.0, 0.0) - a[1][0] - a[1][1];
        let e1 = basis.unit(0);
        let cubic = e1.cubic_term();
        let ib = Complex64::new(0.0, p.b);
        Ok(Self {
            basis: Arc::clone(basis),
            f_lin,
            f_cub: cubic.coeffs().iter().map(|c| ib * c).collect(),
            h_lin,
        })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// The exact state at time `t`.
    pub fn exact(&self, t: f64) -> SystemState {
        let mut s = SystemState::zeros(&self.basis, t);
        let amp = Complex64::new((-t).exp(), 0.0);
        s.v.coeffs_mut()[0] = amp;
        s.phi.coeffs_mut()[0] = amp;
        s
    }
}

impl Source for ManufacturedSource {
    fn eval(&self, t: f64, f: &mut [Complex64], h: &mut [Complex64]) {
        let e1 = (-t).exp();
        let e3 = (-3.0 * t).exp();
        for (o, c) in f.iter_mut().zip(&self.f_cub) {
            *o = c * e3;
        }
        f[0] += self.f_lin * e1;
        h.fill(Complex64::new(0.0, 0.0));
        h[0] = self.h_lin * e1;
    }
}
