//! Splittings of trajectories into an exponentially decaying linear part and
//! a smoother remainder.
//!
//! For a single trajectory the boson field splits as `φ = φᵈ + φᶜ`, where
//! `φᵈ` is the free damped flow of `φ₀` and `φᶜ` starts at zero and is driven
//! by `v` and `h`. For a pair of trajectories the difference splits into the
//! solution of the upper-triangular linear system (boson row decoupled) and a
//! remainder carrying the nonlinearity and the `v → φ` feedback.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{linear_block, Derivative, Integrator, LinearBlock, RunOptions, SystemState};
use crate::error::{Error, Result};
use crate::model::{Forcing, PhysParams};
use crate::spectral::{Basis, SpectralField};

/// Per-mode exponent `−(γ + iΩ_j)` of the free boson flow.
fn boson_exponent(p: &PhysParams, lambda: f64) -> Complex64 {
    Complex64::new(-p.gamma, -p.boson_frequency(lambda))
}

/// Closed-form free damped boson flow of `phi0` after time `t`.
pub fn phi_d_exact(phi0: &SpectralField, p: &PhysParams, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    let basis = Arc::clone(phi0.basis());
    Ok(phi0.with_coeffs(
        phi0.coeffs()
            .iter()
            .zip(basis.modes())
            .map(|(z, m)| z * (boson_exponent(p, m.lambda) * t).exp())
            .collect(),
    ))
}

/// `φ_k(z) = Σ_n zⁿ/(n+k)!` for `k = 0..=4`.
pub fn phi_functions(z: Complex64) -> [Complex64; 5] {
    let mut out = [Complex64::new(0.0, 0.0); 5];
    if z.norm() < 1.0 {
        // Taylor series; 30 terms reach roundoff for |z| < 1.
        for (k, slot) in out.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0 / factorial(k), 0.0);
            let mut acc = term;
            for n in 1..30 {
                term *= z / (n + k) as f64;
                acc += term;
            }
            *slot = acc;
        }
    } else {
        out[0] = z.exp();
        for k in 0..4 {
            out[k + 1] = (out[k] - 1.0 / factorial(k)) / z;
        }
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// Integrates the forced boson remainder `φᶜ` alongside a trajectory.
///
/// Over each step the trajectory's `v` is replaced by its cubic Hermite
/// interpolant built from `v` and `v_t` at both ends, and the resulting
/// linear inhomogeneous equation is solved exactly per mode.
#[derive(Debug, Clone)]
pub struct PhiCompactTracker {
    params: PhysParams,
    exponents: Vec<Complex64>,
    h: Vec<Complex64>,
    phi_c: SpectralField,
    t: f64,
    cache: Option<(f64, Vec<[Complex64; 5]>)>,
}

impl PhiCompactTracker {
    pub fn new(params: PhysParams, forcing: &Forcing, t0: f64) -> Self {
        let basis = forcing.h.basis();
        Self {
            params,
            exponents: basis.lambdas().map(|l| boson_exponent(&params, l)).collect(),
            h: forcing.h.coeffs().to_vec(),
            phi_c: forcing.h.zeros_like(),
            t: t0,
            cache: None,
        }
    }

    pub fn phi_c(&self) -> &SpectralField {
        &self.phi_c
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Advances from `(a, a_t)` to `(b, b_t)`.
    pub fn advance(&mut self, a: (&SystemState, &Derivative), b: (&SystemState, &Derivative)) -> Result<()> {
        let step = b.0.t - a.0.t;
        if (a.0.t - self.t).abs() > 1e-9 * (1.0 + self.t.abs()) || !(step > 0.0) {
            return Err(Error::Sampling(format!(
                "tracker at t = {} cannot advance from {} to {}",
                self.t, a.0.t, b.0.t
            )));
        }
        let need_new = self.cache.as_ref().is_none_or(|(h, _)| *h != step);
        if need_new {
            let table = self.exponents.iter().map(|e| phi_functions(e * step)).collect();
            self.cache = Some((step, table));
        }
        let table = &self.cache.as_ref().expect("filled above").1;
        let coupling = Complex64::new(0.0, self.params.g / self.params.u);
        let (v0, v0t, v1, v1t) = (a.0.v.coeffs(), a.1.dv.coeffs(), b.0.v.coeffs(), b.1.dv.coeffs());
        for (k, pc) in self.phi_c.coeffs_mut().iter_mut().enumerate() {
            let f = &table[k];
            let (p0, p1) = (v0[k], v1[k]);
            let (d0, d1) = (v0t[k] * step, v1t[k] * step);
            let c0 = p0;
            let c1 = d0;
            let c2 = -3.0 * p0 - 2.0 * d0 + 3.0 * p1 - d1;
            let c3 = 2.0 * p0 + d0 - 2.0 * p1 + d1;
            let drive = c0 * f[1] + c1 * f[2] + 2.0 * c2 * f[3] + 6.0 * c3 * f[4];
            *pc = f[0] * *pc + (coupling * drive + self.h[k] * f[1]) * step;
        }
        self.t = b.0.t;
        Ok(())
    }
}

/// Norm histories of the single-trajectory boson splitting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhiSplit {
    pub times: Vec<f64>,
    /// `‖φᵈ(t)‖_{H¹}` from the closed form.
    pub phid_h1_exact: Vec<f64>,
    /// `‖φ(t) − φᶜ(t)‖_{H¹}` with `φᶜ` from the co-integrated remainder.
    pub phid_h1_stepped: Vec<f64>,
    /// `e^{−γt}‖φ₀‖_{H¹}`.
    pub expected: Vec<f64>,
    pub phic_h1: Vec<f64>,
    pub phic_h2: Vec<f64>,
    /// `‖(φ − φᵈ) − φᶜ‖_{H¹}`: disagreement of the two remainder routes.
    pub route_gap_h1: Vec<f64>,
    /// `‖φᵈ + φᶜ − φ‖_{H¹}` with the closed-form `φᵈ` and routed `φᶜ = φ − φᵈ`.
    pub sum_defect_h1: Vec<f64>,
}

impl PhiSplit {
    /// Largest relative deviation of the closed-form route from the
    /// exponential law.
    pub fn exact_deviation(&self) -> f64 {
        rel_dev(&self.phid_h1_exact, &self.expected)
    }

    pub fn stepped_deviation(&self) -> f64 {
        rel_dev(&self.phid_h1_stepped, &self.expected)
    }

    pub fn max_route_gap(&self) -> f64 {
        self.route_gap_h1.iter().copied().fold(0.0, f64::max)
    }

    /// `sup_{t ≥ t₀ + r} ‖φᶜ(t)‖_{H²}`.
    pub fn sup_phic_h2_after(&self, r: f64) -> f64 {
        let t0 = self.times.first().copied().unwrap_or(0.0);
        self.times
            .iter()
            .zip(&self.phic_h2)
            .filter(|(t, _)| **t >= t0 + r - 1e-12)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn rel_dev(measured: &[f64], expected: &[f64]) -> f64 {
    let scale = expected.first().copied().unwrap_or(0.0);
    if scale == 0.0 {
        return measured.iter().copied().fold(0.0, |a, b| a.max(b.abs()));
    }
    measured
        .iter()
        .zip(expected)
        .map(|(m, e)| (m - e).abs() / scale)
        .fold(0.0, f64::max)
}

/// Runs a trajectory from `s0` and splits its boson field along the way.
/// The observer receives every sampled `(state, rhs)` as well.
pub fn phi_split(
    integ: &mut Integrator,
    s0: &SystemState,
    horizon: f64,
    opts: &RunOptions,
    mut observer: impl FnMut(&SystemState, &Derivative),
) -> Result<(SystemState, PhiSplit)> {
    let p = *integ.params();
    let forcing = integ.source().clone();
    let mut tracker = PhiCompactTracker::new(p, &forcing, s0.t);
    let phi0 = s0.phi.clone();
    let phi0_h1 = phi0.h1_sq().sqrt();
    let t0 = s0.t;
    let mut split = PhiSplit::default();
    let mut prev: Option<(SystemState, Derivative)> = None;
    let mut err: Option<Error> = None;
    let mut step_index = 0usize;
    let sample_times = crate::dynamics::sample_times(t0, horizon, opts);
    let mut next_sample = 0usize;

    let every = RunOptions {
        sample_stride: 1,
        ..*opts
    };
    let end = integ.integrate(s0, horizon, &every, |s, d| {
        if err.is_some() {
            return;
        }
        if let Some((ps, pd)) = &prev {
            if let Err(e) = tracker.advance((ps, pd), (s, d)) {
                err = Some(e);
                return;
            }
        }
        step_index += 1;
        if next_sample < sample_times.len() && (s.t - sample_times[next_sample]).abs() <= 1e-12 * (1.0 + s.t.abs()) {
            next_sample += 1;
            match record_split(&p, &phi0, phi0_h1, t0, s, tracker.phi_c()) {
                Ok(row) => split.push(row),
                Err(e) => err = Some(e),
            }
            observer(s, d);
        }
        prev = Some((s.clone(), d.clone()));
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok((end, split))
}

struct SplitRow {
    t: f64,
    exact: f64,
    stepped: f64,
    expected: f64,
    phic_h1: f64,
    phic_h2: f64,
    gap: f64,
    defect: f64,
}

impl PhiSplit {
    fn push(&mut self, r: SplitRow) {
        self.times.push(r.t);
        self.phid_h1_exact.push(r.exact);
        self.phid_h1_stepped.push(r.stepped);
        self.expected.push(r.expected);
        self.phic_h1.push(r.phic_h1);
        self.phic_h2.push(r.phic_h2);
        self.route_gap_h1.push(r.gap);
        self.sum_defect_h1.push(r.defect);
    }
}

fn record_split(
    p: &PhysParams,
    phi0: &SpectralField,
    phi0_h1: f64,
    t0: f64,
    s: &SystemState,
    phi_c: &SpectralField,
) -> Result<SplitRow> {
    let tau = s.t - t0;
    let phid = phi_d_exact(phi0, p, tau)?;
    let routed = s.phi.sub(&phid)?;
    let stepped = s.phi.sub(phi_c)?;
    Ok(SplitRow {
        t: s.t,
        exact: phid.h1_sq().sqrt(),
        stepped: stepped.h1_sq().sqrt(),
        expected: phi0_h1 * (-p.gamma * tau).exp(),
        phic_h1: phi_c.h1_sq().sqrt(),
        phic_h2: phi_c.h2_sq().sqrt(),
        gap: routed.sub(phi_c)?.h1_sq().sqrt(),
        defect: phid.add(&routed)?.sub(&s.phi)?.h1_sq().sqrt(),
    })
}

/// The upper-triangular block of the linear difference system.
pub fn stable_block(p: &PhysParams, lambda: f64) -> LinearBlock {
    linear_block(p, lambda).stable_part()
}

/// Closed-form stable part `(vᵈ, φᵈ)(t)` of a difference with initial value
/// `(dv0, dphi0)`.
pub fn stable_part(p: &PhysParams, dv0: &SpectralField, dphi0: &SpectralField, t: f64) -> Result<(SpectralField, SpectralField)> {
    let s = SystemState::new(dv0.clone(), dphi0.clone(), 0.0)?;
    let out = crate::dynamics::linear_flow_with(&s, t, |l| stable_block(p, l))?;
    Ok((out.v, out.phi))
}

/// One sample of a difference splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSample {
    pub t: f64,
    pub stable: (SpectralField, SpectralField),
    pub compact: (SpectralField, SpectralField),
}

/// Stable/compact splitting of the difference of two sampled trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTrajectory {
    pub samples: Vec<SplitSample>,
    /// `max_t ‖stable + compact − difference‖_{H¹×H¹}`.
    pub sum_defect: f64,
    /// `‖compact(t₀)‖_{H¹×H¹}`.
    pub initial_compact: f64,
}

fn pair_h1(a: &SpectralField, b: &SpectralField) -> f64 {
    (a.h1_sq() + b.h1_sq()).sqrt()
}

fn pair_h2(a: &SpectralField, b: &SpectralField) -> f64 {
    (a.h2_sq() + b.h2_sq()).sqrt()
}

/// Splits `z1 − z2` sample by sample. Both trajectories must share their
/// sample times; time is measured from the first sample.
pub fn difference_split(z1: &[SystemState], z2: &[SystemState], p: &PhysParams) -> Result<SplitTrajectory> {
    if z1.len() != z2.len() || z1.is_empty() {
        return Err(Error::Sampling(format!(
            "trajectories have {} and {} samples",
            z1.len(),
            z2.len()
        )));
    }
    if z1.iter().zip(z2).any(|(a, b)| (a.t - b.t).abs() > 1e-12 * (1.0 + a.t.abs())) {
        return Err(Error::Sampling("sample times differ".into()));
    }
    let (dv0, dphi0) = z1[0].difference(&z2[0])?;
    let t0 = z1[0].t;
    let mut samples = Vec::with_capacity(z1.len());
    let mut sum_defect: f64 = 0.0;
    for (a, b) in z1.iter().zip(z2) {
        let (dv, dphi) = a.difference(b)?;
        let (sv, sp) = stable_part(p, &dv0, &dphi0, a.t - t0)?;
        let cv = dv.sub(&sv)?;
        let cp = dphi.sub(&sp)?;
        let defect = pair_h1(&sv.add(&cv)?.sub(&dv)?, &sp.add(&cp)?.sub(&dphi)?);
        sum_defect = sum_defect.max(defect);
        samples.push(SplitSample {
            t: a.t,
            stable: (sv, sp),
            compact: (cv, cp),
        });
    }
    let initial_compact = pair_h1(&samples[0].compact.0, &samples[0].compact.1);
    Ok(SplitTrajectory {
        samples,
        sum_defect,
        initial_compact,
    })
}

/// Result of the contraction/smoothing check on a set of pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// Smallest sampled time after which every pair's stable part stays
    /// below `lambda_target` relative to its initial gap; `None` if the
    /// horizon is too short.
    pub t_star: Option<f64>,
    /// `max_pairs ‖(vᵈ, φᵈ)(t*)‖_{H¹×H¹} / ‖z₀‖` (or the best value reached).
    pub lambda: f64,
    /// `max_pairs ‖(vᶜ, φᶜ)(t*)‖_{H²×H²} / ‖z₀‖`.
    pub big_lambda: f64,
    pub lambda_target: f64,
    /// Reported decay rate of the stable `v` part.
    pub gamma1: f64,
    pub pairs: usize,
    /// Pairs with zero initial gap, skipped.
    pub degenerate_pairs: usize,
    pub sample_interval: f64,
    pub passed: bool,
}

/// `max_pairs ‖stable(t)‖/‖z₀‖` on a time grid.
pub fn stable_contraction_curve(
    p: &PhysParams,
    gaps: &[(SpectralField, SpectralField)],
    times: &[f64],
) -> Result<Vec<f64>> {
    let mut curve = vec![0.0; times.len()];
    for (dv0, dphi0) in gaps {
        let z0 = pair_h1(dv0, dphi0);
        if z0 == 0.0 {
            continue;
        }
        for (c, &t) in curve.iter_mut().zip(times) {
            let (sv, sp) = stable_part(p, dv0, dphi0, t)?;
            *c = f64::max(*c, pair_h1(&sv, &sp) / z0);
        }
    }
    Ok(curve)
}

/// First grid time after which `curve` stays at or below `target`.
pub fn first_time_below(curve: &[f64], target: f64) -> Option<usize> {
    let mut idx = None;
    for k in (0..curve.len()).rev() {
        if curve[k] <= target {
            idx = Some(k);
        } else {
            break;
        }
    }
    idx
}

/// Checks the contraction/smoothing pair `(λ, Λ)` on a set of initial-data
/// pairs: finds `t*` from the closed-form stable part, integrates each pair
/// to `t*`, and measures the compact part there.
pub fn contraction_certificate(
    pairs: &[(SystemState, SystemState)],
    p: &PhysParams,
    forcing: &Forcing,
    lambda_target: f64,
    horizon: f64,
    opts: &RunOptions,
) -> Result<ContractionReport> {
    if !(lambda_target > 0.0 && lambda_target < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "lambda_target must lie in (0, 1/2), got {lambda_target}"
        )));
    }
    let interval = opts.dt * opts.sample_stride as f64;
    let times = crate::dynamics::sample_times(0.0, horizon, opts);
    let mut gaps = Vec::new();
    let mut degenerate = 0;
    for (a, b) in pairs {
        let (dv, dp) = a.difference(b)?;
        if pair_h1(&dv, &dp) == 0.0 {
            degenerate += 1;
        } else {
            gaps.push((dv, dp));
        }
    }
    let curve = stable_contraction_curve(p, &gaps, &times)?;
    let hit = first_time_below(&curve, lambda_target);
    let mut report = ContractionReport {
        t_star: hit.map(|k| times[k]),
        lambda: hit.map(|k| curve[k]).unwrap_or_else(|| curve.iter().copied().fold(f64::INFINITY, f64::min)),
        big_lambda: f64::NAN,
        lambda_target,
        gamma1: p.gamma / 2.0,
        pairs: pairs.len(),
        degenerate_pairs: degenerate,
        sample_interval: interval,
        passed: false,
    };
    let Some(t_star) = report.t_star else {
        return Ok(report);
    };

    let ratios: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|(a, b)| {
            let (dv0, dp0) = a.difference(b)?;
            let z0 = pair_h1(&dv0, &dp0);
            if z0 == 0.0 {
                return Ok(0.0);
            }
            let mut integ = Integrator::new(*p, forcing)?;
            let mut shifted = (a.clone(), b.clone());
            shifted.0.t = 0.0;
            shifted.1.t = 0.0;
            let ea = integ.integrate(&shifted.0, t_star, opts, |_, _| {})?;
            let eb = integ.integrate(&shifted.1, t_star, opts, |_, _| {})?;
            let split = difference_split(&[shifted.0.clone(), ea], &[shifted.1.clone(), eb], p)?;
            let last = split.samples.last().expect("two samples");
            Ok(pair_h2(&last.compact.0, &last.compact.1) / z0)
        })
        .collect();
    let mut big = 0.0f64;
    for r in ratios {
        big = big.max(r?);
    }
    report.big_lambda = big;
    report.passed = report.lambda < 0.5 && report.lambda <= lambda_target && big.is_finite();
    Ok(report)
}

/// Builds `count` pure-boson difference pairs `(z, z + (0, δφ_k))`.
pub fn pure_phi_pairs(base: &[SystemState], perturbations: &[SpectralField]) -> Vec<(SystemState, SystemState)> {
    base.iter()
        .zip(perturbations)
        .map(|(z, d)| {
            let mut other = z.clone();
            other.phi = z.phi.add(d).expect("same basis");
            (z.clone(), other)
        })
        .collect()
}

/// Unit vector helper for building pair perturbations on a basis.
pub fn scaled_unit(basis: &Arc<Basis>, position: usize, scale: f64) -> SpectralField {
    basis.unit(position).scaled(Complex64::new(scale, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoxDomain;

    fn field(basis: &Arc<Basis>, seed: u64, scale: f64) -> SpectralField {
        let mut x = seed ^ 0xD1B54A32D192ED03;
        let mut next = move || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        basis.field_from_fn(|m| Complex64::new(next(), next()) * scale * m.lambda.powf(-1.5))
    }

    #[test]
    fn free_flow_modulus_law() {
        let b = Basis::new(BoxDomain::default_interval(16)).unwrap();
        let p = PhysParams::default();
        let phi0 = field(&b, 1, 2.0);
        assert_eq!(phi_d_exact(&phi0, &p, 0.0).unwrap(), phi0);
        for t in [0.3, 2.0, 7.5] {
            let d = phi_d_exact(&phi0, &p, t).unwrap();
            let expect = (-p.gamma * t).exp();
            assert!((d.h1_sq().sqrt() - expect * phi0.h1_sq().sqrt()).abs() < 1e-13);
            for (a, z) in d.coeffs().iter().zip(phi0.coeffs()) {
                assert!((a.norm() - expect * z.norm()).abs() < 1e-15);
            }
        }
        let d = phi_d_exact(&phi0, &p, 2.0).unwrap();
        assert!((d.coeffs()[0].norm() / phi0.coeffs()[0].norm() - 0.36787944117144233).abs() < 1e-15);
        assert!(phi_d_exact(&phi0, &p, -1.0).is_err());
    }

    #[test]
    fn phi_functions_both_branches() {
        for z in [Complex64::new(0.3, -0.2), Complex64::new(-2.0, 4.0), Complex64::new(0.99, 0.0), Complex64::new(1.01, 0.0)] {
            let f = phi_functions(z);
            assert!((f[0] - z.exp()).norm() < 1e-14 * z.exp().norm().max(1.0));
            assert!((f[1] - (z.exp() - 1.0) / z).norm() < 1e-13);
            assert!((f[2] - (z.exp() - 1.0 - z) / (z * z)).norm() < 1e-12);
            // quadrature definition φ_k(z) = ∫₀¹ e^{(1−θ)z} θ^{k−1}/(k−1)! dθ
            let n = 4000;
            let mut q = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let th = (i as f64 + 0.5) / n as f64;
                q += ((1.0 - th) * z).exp() * th.powi(3) / 6.0;
            }
            q /= n as f64;
            assert!((f[4] - q).norm() < 1e-7, "{z}: {} vs {}", f[4], q);
        }
    }

    #[test]
    fn tracker_is_exact_for_cubic_in_time_drivers() {
        // v(t) = (1 + t + t² − t³/2) ê₁ is reproduced exactly by the Hermite
        // interpolant, so φᶜ must match a fine reference quadrature.
        let b = Basis::new(BoxDomain::default_interval(4)).unwrap();
        let p = PhysParams::default();
        let forcing = Forcing::zero(&b.zeros());
        let poly = |t: f64| 1.0 + t + t * t - 0.5 * t * t * t;
        let dpoly = |t: f64| 1.0 + 2.0 * t - 1.5 * t * t;
        let mk = |t: f64| {
            let mut s = SystemState::zeros(&b, t);
            s.v.coeffs_mut()[0] = Complex64::new(poly(t), 0.0);
            let mut d = Derivative { dv: b.zeros(), dphi: b.zeros() };
            d.dv.coeffs_mut()[0] = Complex64::new(dpoly(t), 0.0);
            (s, d)
        };
        let mut tr = PhiCompactTracker::new(p, &forcing, 0.0);
        let (a, da) = mk(0.0);
        let (c, dc) = mk(0.7);
        tr.advance((&a, &da), (&c, &dc)).unwrap();
        let e = boson_exponent(&p, 1.0);
        let n = 20000;
        let mut q = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let s = (i as f64 + 0.5) / n as f64 * 0.7;
            q += (e * (0.7 - s)).exp() * poly(s);
        }
        q *= Complex64::new(0.0, p.g / p.u) * (0.7 / n as f64);
        assert!((tr.phi_c().coeffs()[0] - q).norm() < 1e-8);
        // stale start time is rejected
        assert!(tr.advance((&a, &da), (&c, &dc)).is_err());
    }

    #[test]
    fn zero_v_and_h_give_no_remainder() {
        let b = Basis::new(BoxDomain::default_interval(8)).unwrap();
        let p = PhysParams { b: 0.0, ..PhysParams::default() };
        let p = PhysParams { g: 0.0, ..p };
        let mut integ = Integrator::new(p, &Forcing::zero(&b.zeros())).unwrap();
        let s0 = SystemState::new(b.zeros(), field(&b, 3, 1.0), 0.0).unwrap();
        let (_, split) = phi_split(&mut integ, &s0, 2.0, &RunOptions { dt: 1e-2, sample_stride: 10, guard: 1e6 }, |_, _| {}).unwrap();
        assert!(split.phic_h1.iter().all(|&x| x == 0.0));
        assert!(split.exact_deviation() < 1e-13);
        assert!(split.stepped_deviation() < 1e-12);
        assert_eq!(split.times.len(), 21);
    }

    #[test]
    fn routes_agree_on_a_nonlinear_run() {
        let b = Basis::new(BoxDomain::default_interval(16)).unwrap();
        let p = PhysParams::default();
        let forcing = Forcing { f: field(&b, 7, 1.0), h: field(&b, 8, 1.0) };
        let mut integ = Integrator::new(p, &forcing).unwrap();
        let s0 = SystemState::new(field(&b, 1, 2.0), field(&b, 2, 2.0), 0.0).unwrap();
        let (_, split) = phi_split(&mut integ, &s0, 2.0, &RunOptions { dt: 1e-3, sample_stride: 50, guard: 1e6 }, |_, _| {}).unwrap();
        assert!(split.exact_deviation() < 1e-12);
        assert!(split.max_route_gap() < 1e-6, "gap {}", split.max_route_gap());
        assert!(split.sum_defect_h1.iter().all(|&d| d < 1e-12));
        assert!(split.sup_phic_h2_after(0.5).is_finite());
    }

    #[test]
    fn identical_trajectories_split_to_zero() {
        let b = Basis::new(BoxDomain::default_interval(8)).unwrap();
        let p = PhysParams::default();
        let s = SystemState::new(field(&b, 1, 1.0), field(&b, 2, 1.0), 0.0).unwrap();
        let split = difference_split(std::slice::from_ref(&s), std::slice::from_ref(&s), &p).unwrap();
        let first = &split.samples[0];
        assert!(first.stable.0.is_zero() && first.compact.1.is_zero());
        let mut late = s.clone();
        late.t = 1.0;
        assert!(difference_split(std::slice::from_ref(&s), &[late], &p).is_err());
        assert!(difference_split(&[s.clone(), s.clone()], &[s], &p).is_err());
    }

    #[test]
    fn linear_uncoupled_difference_has_no_compact_part() {
        let b = Basis::new(BoxDomain::default_interval(16)).unwrap();
        let p = PhysParams { b: 0.0, g: 0.0, ..PhysParams::default() };
        let forcing = Forcing { f: field(&b, 3, 1.0), h: field(&b, 4, 1.0) };
        let mut integ = Integrator::new(p, &forcing).unwrap();
        let opts = RunOptions { dt: 1e-3, sample_stride: 100, guard: 1e6 };
        let a0 = SystemState::new(field(&b, 1, 1.0), field(&b, 2, 1.0), 0.0).unwrap();
        let b0 = SystemState::new(field(&b, 5, 1.0), field(&b, 6, 1.0), 0.0).unwrap();
        let mut za = Vec::new();
        let mut zb = Vec::new();
        integ.integrate(&a0, 2.0, &opts, |s, _| za.push(s.clone())).unwrap();
        integ.integrate(&b0, 2.0, &opts, |s, _| zb.push(s.clone())).unwrap();
        let split = difference_split(&za, &zb, &p).unwrap();
        assert_eq!(split.initial_compact, 0.0);
        assert!(split.sum_defect < 1e-12);
        for smp in &split.samples {
            assert!(pair_h1(&smp.compact.0, &smp.compact.1) < 1e-10);
        }
    }

    #[test]
    fn stable_boson_part_decays_exactly() {
        let b = Basis::new(BoxDomain::default_interval(16)).unwrap();
        let p = PhysParams::default();
        let (dv, dp) = (field(&b, 1, 1.0), field(&b, 2, 1.0));
        for t in [0.0, 0.5, 3.0] {
            let (_, sp) = stable_part(&p, &dv, &dp, t).unwrap();
            let expect = (-p.gamma * t).exp() * dp.h1_sq().sqrt();
            assert!((sp.h1_sq().sqrt() - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn contraction_time_for_decoupled_boson_differences() {
        let b = Basis::new(BoxDomain::default_interval(16)).unwrap();
        let p = PhysParams { g: 0.0, ..PhysParams::default() };
        let forcing = Forcing::zero(&b.zeros());
        let base: Vec<_> = (0..3)
            .map(|k| SystemState::new(field(&b, 10 + k, 1.0), field(&b, 20 + k, 1.0), 0.0).unwrap())
            .collect();
        let pert: Vec<_> = (0..3).map(|k| field(&b, 30 + k, 1e-2)).collect();
        let mut pairs = pure_phi_pairs(&base, &pert);
        pairs.push((base[0].clone(), base[0].clone()));
        let opts = RunOptions { dt: 1e-3, sample_stride: 10, guard: 1e6 };
        let rep = contraction_certificate(&pairs, &p, &forcing, 0.25, 5.0, &opts).unwrap();
        let predicted = 4.0f64.ln() / p.gamma;
        let t_star = rep.t_star.unwrap();
        assert!((t_star - predicted).abs() <= rep.sample_interval + 1e-12, "{t_star} vs {predicted}");
        assert!(rep.passed && rep.big_lambda.is_finite());
        assert_eq!(rep.degenerate_pairs, 1);
        assert!(contraction_certificate(&pairs, &p, &forcing, 0.6, 5.0, &opts).is_err());

        // horizon too short: report the best λ reached
        let short = contraction_certificate(&pairs, &p, &forcing, 0.25, 1.0, &opts).unwrap();
        assert!(short.t_star.is_none() && !short.passed);
        assert!((short.lambda - (-p.gamma).exp()).abs() < 1e-12);
    }

    #[test]
    fn contraction_curve_is_monotone() {
        let b = Basis::new(BoxDomain::default_interval(16)).unwrap();
        let p = PhysParams::default();
        let gaps = vec![(field(&b, 1, 1.0), field(&b, 2, 1.0)), (b.zeros(), field(&b, 3, 1.0))];
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let c = stable_contraction_curve(&p, &gaps, &times).unwrap();
        assert!(c.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }
}
