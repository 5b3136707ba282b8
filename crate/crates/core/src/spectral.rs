//! Dirichlet sine eigenbasis on a box: coefficient fields, grid transforms,
//! diagonal norms, and the dealiased cubic nonlinearity.
//!
//! The basis is orthonormal in L², `ω̂_j(x) = sqrt(2/L)·sin(jπx/L)` per axis,
//! so every Sobolev norm is a weighted sum over coefficients. One-dimensional
//! domains are handled as the degenerate tensor case with a single trivial
//! second axis, which lets both dimensions share the same separable kernels.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::BoxDomain;

/// One active tensor mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// 1-based sine index per axis; the second entry is 1 in one dimension.
    pub index: [usize; 2],
    /// Dirichlet eigenvalue of `−Δ`.
    pub lambda: f64,
}

/// Sampled basis functions along one axis at the interior nodes of a grid.
#[derive(Debug, Clone)]
struct AxisTable {
    nodes: usize,
    modes: usize,
    /// Quadrature weight (node spacing).
    weight: f64,
    /// `values[k * modes + (j-1)] = ω̂_j(x_k)`.
    values: Vec<f64>,
    /// `deriv[k * modes + (j-1)] = ω̂_j'(x_k)`.
    deriv: Vec<f64>,
}

impl AxisTable {
    fn new(length: f64, modes: usize, intervals: usize) -> Self {
        let nodes = intervals - 1;
        let h = length / intervals as f64;
        let norm = (2.0 / length).sqrt();
        let mut values = Vec::with_capacity(nodes * modes);
        let mut deriv = Vec::with_capacity(nodes * modes);
        for k in 1..=nodes {
            for j in 1..=modes {
                // Reduce the phase exactly in integers before scaling.
                let phase = PI * ((j * k) % (2 * intervals)) as f64 / intervals as f64;
                let kj = j as f64 * PI / length;
                values.push(norm * phase.sin());
                deriv.push(norm * kj * phase.cos());
            }
        }
        Self {
            nodes,
            modes,
            weight: h,
            values,
            deriv,
        }
    }

    /// The trivial axis of a one-dimensional domain.
    fn unit() -> Self {
        Self {
            nodes: 1,
            modes: 1,
            weight: 1.0,
            values: vec![1.0],
            deriv: vec![0.0],
        }
    }

    fn table(&self, derivative: bool) -> &[f64] {
        if derivative {
            &self.deriv
        } else {
            &self.values
        }
    }
}

/// Transform tables for one grid resolution.
#[derive(Debug, Clone)]
struct GridPlan {
    resolution: Vec<usize>,
    axes: [AxisTable; 2],
}

impl GridPlan {
    fn new(domain: &BoxDomain, resolution: &[usize]) -> Self {
        let first = AxisTable::new(domain.lengths[0], domain.modes[0], resolution[0]);
        let second = if domain.dim() == 2 {
            AxisTable::new(domain.lengths[1], domain.modes[1], resolution[1])
        } else {
            AxisTable::unit()
        };
        Self {
            resolution: resolution.to_vec(),
            axes: [first, second],
        }
    }

    fn node_count(&self) -> usize {
        self.axes[0].nodes * self.axes[1].nodes
    }

    fn cell_weight(&self) -> f64 {
        self.axes[0].weight * self.axes[1].weight
    }

    /// Evaluates a dense `l₁ × l₂` coefficient block on the grid, optionally
    /// differentiating along one axis.
    fn synthesize_dense(&self, dense: &[Complex64], derivative: Option<usize>) -> Vec<Complex64> {
        let [a1, a2] = &self.axes;
        let t1 = a1.table(derivative == Some(0));
        let t2 = a2.table(derivative == Some(1));
        let (n1, n2, l1, l2) = (a1.nodes, a2.nodes, a1.modes, a2.modes);

        // tmp[k1][j2] = Σ_j1 t1[k1][j1] · C[j1][j2]
        let mut tmp = vec![Complex64::new(0.0, 0.0); n1 * l2];
        for k1 in 0..n1 {
            let row = &t1[k1 * l1..(k1 + 1) * l1];
            let out = &mut tmp[k1 * l2..(k1 + 1) * l2];
            for (j1, &s) in row.iter().enumerate() {
                let c = &dense[j1 * l2..(j1 + 1) * l2];
                for (o, &z) in out.iter_mut().zip(c) {
                    *o += z * s;
                }
            }
        }
        if n2 == 1 && l2 == 1 && t2[0] == 1.0 {
            return tmp;
        }
        // G[k1][k2] = Σ_j2 tmp[k1][j2] · t2[k2][j2]
        let mut grid = vec![Complex64::new(0.0, 0.0); n1 * n2];
        for k1 in 0..n1 {
            let row = &tmp[k1 * l2..(k1 + 1) * l2];
            for k2 in 0..n2 {
                let col = &t2[k2 * l2..(k2 + 1) * l2];
                grid[k1 * n2 + k2] = row.iter().zip(col).map(|(&z, &s)| z * s).sum();
            }
        }
        grid
    }

    /// Weighted discrete sine transform of grid values back to a dense block.
    fn analyze_dense(&self, values: &[Complex64]) -> Vec<Complex64> {
        let [a1, a2] = &self.axes;
        let (n1, n2, l1, l2) = (a1.nodes, a2.nodes, a1.modes, a2.modes);
        let t1 = &a1.values;
        let t2 = &a2.values;

        let tmp: Vec<Complex64> = if n2 == 1 && l2 == 1 && t2[0] == 1.0 {
            values.to_vec()
        } else {
            let mut tmp = vec![Complex64::new(0.0, 0.0); n1 * l2];
            for k1 in 0..n1 {
                let row = &values[k1 * n2..(k1 + 1) * n2];
                let out = &mut tmp[k1 * l2..(k1 + 1) * l2];
                for (k2, &z) in row.iter().enumerate() {
                    let s = &t2[k2 * l2..(k2 + 1) * l2];
                    for (o, &w) in out.iter_mut().zip(s) {
                        *o += z * w;
                    }
                }
            }
            tmp
        };
        let mut dense = vec![Complex64::new(0.0, 0.0); l1 * l2];
        for k1 in 0..n1 {
            let row = &t1[k1 * l1..(k1 + 1) * l1];
            let t = &tmp[k1 * l2..(k1 + 1) * l2];
            for (j1, &s) in row.iter().enumerate() {
                let out = &mut dense[j1 * l2..(j1 + 1) * l2];
                for (o, &z) in out.iter_mut().zip(t) {
                    *o += z * s;
                }
            }
        }
        let w = self.cell_weight();
        for z in &mut dense {
            *z *= w;
        }
        dense
    }
}

/// The active mode set of a [`BoxDomain`] together with cached transform
/// tables for the domain's own quadrature grid.
pub struct Basis {
    domain: BoxDomain,
    modes: Vec<Mode>,
    /// Position of each ordered mode inside the dense `l₁ × l₂` block.
    dense_index: Vec<usize>,
    plan: GridPlan,
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Basis")
            .field("domain", &self.domain)
            .field("modes", &self.modes.len())
            .finish()
    }
}

impl Basis {
    pub fn new(domain: BoxDomain) -> Result<Arc<Self>> {
        domain.validate()?;
        let l1 = domain.modes[0];
        let l2 = if domain.dim() == 2 { domain.modes[1] } else { 1 };
        let k1 = PI / domain.lengths[0];
        let k2 = if domain.dim() == 2 { PI / domain.lengths[1] } else { 0.0 };

        let mut modes = Vec::with_capacity(l1 * l2);
        for j1 in 1..=l1 {
            for j2 in 1..=l2 {
                let lambda = (j1 as f64 * k1).powi(2)
                    + if domain.dim() == 2 { (j2 as f64 * k2).powi(2) } else { 0.0 };
                modes.push(Mode {
                    index: [j1, j2],
                    lambda,
                });
            }
        }
        // Nondecreasing eigenvalue, ties broken by the first then second index.
        modes.sort_by(|a, b| {
            let scale = a.lambda.abs().max(b.lambda.abs());
            if (a.lambda - b.lambda).abs() <= 1e-12 * scale {
                a.index.cmp(&b.index)
            } else {
                a.lambda.total_cmp(&b.lambda)
            }
        });
        let dense_index = modes
            .iter()
            .map(|m| (m.index[0] - 1) * l2 + (m.index[1] - 1))
            .collect();
        let plan = GridPlan::new(&domain, &domain.grid);
        Ok(Arc::new(Self {
            domain,
            modes,
            dense_index,
            plan,
        }))
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        self.modes.iter().map(|m| m.lambda)
    }

    pub fn lambda_min(&self) -> f64 {
        self.modes[0].lambda
    }

    pub fn zeros(self: &Arc<Self>) -> SpectralField {
        SpectralField {
            basis: Arc::clone(self),
            coeffs: vec![Complex64::new(0.0, 0.0); self.len()],
        }
    }

    /// Unit coefficient vector on the `position`-th ordered mode.
    pub fn unit(self: &Arc<Self>, position: usize) -> SpectralField {
        let mut f = self.zeros();
        f.coeffs[position] = Complex64::new(1.0, 0.0);
        f
    }

    pub fn field(self: &Arc<Self>, coeffs: Vec<Complex64>) -> Result<SpectralField> {
        if coeffs.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                self.len(),
                coeffs.len()
            )));
        }
        let f = SpectralField {
            basis: Arc::clone(self),
            coeffs,
        };
        f.check_finite("coefficients")?;
        Ok(f)
    }

    pub fn field_from_fn(self: &Arc<Self>, f: impl FnMut(&Mode) -> Complex64) -> SpectralField {
        SpectralField {
            basis: Arc::clone(self),
            coeffs: self.modes.iter().map(f).collect(),
        }
    }

    /// Ordered position of the mode with the given 1-based per-axis index.
    pub fn position_of(&self, index: [usize; 2]) -> Option<usize> {
        self.modes.iter().position(|m| m.index == index)
    }

    fn to_dense(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut dense = vec![Complex64::new(0.0, 0.0); coeffs.len()];
        for (&c, &k) in coeffs.iter().zip(&self.dense_index) {
            dense[k] = c;
        }
        dense
    }

    fn gather_dense(&self, dense: &[Complex64]) -> Vec<Complex64> {
        self.dense_index.iter().map(|&k| dense[k]).collect()
    }

    fn check_resolution(&self, resolution: &[usize], factor: usize) -> Result<()> {
        if resolution.len() != self.domain.dim() {
            return Err(Error::InvalidArgument("resolution needs one entry per axis".into()));
        }
        for (&n, &l) in resolution.iter().zip(&self.domain.modes) {
            if n < factor * l || n < 2 {
                return Err(Error::Resolution {
                    resolution: n,
                    modes: l,
                    required: (factor * l).max(2),
                });
            }
        }
        Ok(())
    }

    fn plan_for(&self, resolution: &[usize]) -> std::borrow::Cow<'_, GridPlan> {
        if resolution == self.plan.resolution.as_slice() {
            std::borrow::Cow::Borrowed(&self.plan)
        } else {
            std::borrow::Cow::Owned(GridPlan::new(&self.domain, resolution))
        }
    }

    /// Evaluates the finite sine series at the interior nodes of a uniform
    /// grid with `resolution[k]` intervals per axis.
    pub fn synthesize(self: &Arc<Self>, w: &SpectralField, resolution: &[usize]) -> Result<GridField> {
        self.ensure_own(w)?;
        self.check_resolution(resolution, 1)?;
        let plan = self.plan_for(resolution);
        let values = plan.synthesize_dense(&self.to_dense(&w.coeffs), None);
        Ok(GridField {
            basis: Arc::clone(self),
            resolution: resolution.to_vec(),
            values,
        })
    }

    /// Discrete sine transform of grid values onto the active modes.
    pub fn analyze(self: &Arc<Self>, u: &GridField) -> Result<SpectralField> {
        if !Arc::ptr_eq(&u.basis, self) && u.basis.domain != self.domain {
            return Err(Error::DomainMismatch);
        }
        self.check_resolution(&u.resolution, 2)?;
        let plan = self.plan_for(&u.resolution);
        let dense = plan.analyze_dense(&u.values);
        Ok(SpectralField {
            basis: Arc::clone(self),
            coeffs: self.gather_dense(&dense),
        })
    }

    /// Samples `f` at the interior nodes of a grid and projects it onto the
    /// active modes.
    pub fn project(self: &Arc<Self>, f: impl Fn(&[f64]) -> Complex64, resolution: &[usize]) -> Result<SpectralField> {
        self.check_resolution(resolution, 2)?;
        let mut values = Vec::new();
        let dim = self.domain.dim();
        let h: Vec<f64> = (0..dim).map(|k| self.domain.lengths[k] / resolution[k] as f64).collect();
        if dim == 1 {
            for k in 1..resolution[0] {
                values.push(f(&[k as f64 * h[0]]));
            }
        } else {
            for k1 in 1..resolution[0] {
                for k2 in 1..resolution[1] {
                    values.push(f(&[k1 as f64 * h[0], k2 as f64 * h[1]]));
                }
            }
        }
        self.analyze(&GridField {
            basis: Arc::clone(self),
            resolution: resolution.to_vec(),
            values,
        })
    }

    fn ensure_own(&self, w: &SpectralField) -> Result<()> {
        if std::ptr::eq(Arc::as_ptr(&w.basis), self) || w.basis.domain == self.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    /// `∫_Ω |w|⁴` by quadrature on the domain grid (exact for the resolved
    /// degree since the grid carries at least four nodes per mode).
    pub fn l4_norm4(&self, coeffs: &[Complex64]) -> f64 {
        let grid = self.plan.synthesize_dense(&self.to_dense(coeffs), None);
        self.plan.cell_weight() * grid.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>()
    }

    /// Galerkin projection of `|v|²v`, written into `out`.
    pub fn cubic_into(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        let mut grid = self.plan.synthesize_dense(&self.to_dense(coeffs), None);
        for z in &mut grid {
            *z *= z.norm_sqr();
        }
        let dense = self.plan.analyze_dense(&grid);
        for (o, &k) in out.iter_mut().zip(&self.dense_index) {
            *o = dense[k];
        }
    }

    /// `∫_Ω |∇v|²|v|²` on the domain grid.
    pub fn mixed_grad_sq(&self, coeffs: &[Complex64]) -> f64 {
        let dense = self.to_dense(coeffs);
        let v = self.plan.synthesize_dense(&dense, None);
        let mut grad_sq: Vec<f64> = self
            .plan
            .synthesize_dense(&dense, Some(0))
            .iter()
            .map(|z| z.norm_sqr())
            .collect();
        if self.domain.dim() == 2 {
            let dy = self.plan.synthesize_dense(&dense, Some(1));
            for (g, z) in grad_sq.iter_mut().zip(&dy) {
                *g += z.norm_sqr();
            }
        }
        self.plan.cell_weight() * v.iter().zip(&grad_sq).map(|(z, g)| z.norm_sqr() * g).sum::<f64>()
    }

    /// Number of interior quadrature nodes of the domain grid.
    pub fn node_count(&self) -> usize {
        self.plan.node_count()
    }
}

/// Complex coefficients over the ordered active modes of a [`Basis`].
#[derive(Clone)]
pub struct SpectralField {
    basis: Arc<Basis>,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField").field("coeffs", &self.coeffs).finish()
    }
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.same_domain(other) && self.coeffs == other.coeffs
    }
}

/// Diagonal Sobolev norms of a [`SpectralField`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Norms {
    pub l2: f64,
    pub grad: f64,
    pub lap: f64,
    pub hminus1: f64,
    pub h1: f64,
    pub h2: f64,
}

impl SpectralField {
    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn zeros_like(&self) -> Self {
        self.basis.zeros()
    }

    pub fn with_coeffs(&self, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), self.coeffs.len());
        Self {
            basis: Arc::clone(&self.basis),
            coeffs,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn same_domain(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis) || self.basis.domain == other.basis.domain
    }

    fn require_same(&self, other: &Self) -> Result<()> {
        if self.same_domain(other) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    /// `self + alpha·other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Result<Self> {
        self.require_same(other)?;
        Ok(self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * alpha)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|z| z * s).collect())
    }

    pub fn conj(&self) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|z| z.conj()).collect())
    }

    /// Complex L² pairing `(self, other) = ∫ self · conj(other)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        debug_assert!(self.same_domain(other));
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum()
    }

    /// `(∇self, ∇other)`.
    pub fn inner_grad(&self, other: &Self) -> Complex64 {
        debug_assert!(self.same_domain(other));
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .zip(&self.basis.modes)
            .map(|((a, b), m)| a * b.conj() * m.lambda)
            .sum()
    }

    /// `(Δself, Δother)`.
    pub fn inner_lap(&self, other: &Self) -> Complex64 {
        debug_assert!(self.same_domain(other));
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .zip(&self.basis.modes)
            .map(|((a, b), m)| a * b.conj() * (m.lambda * m.lambda))
            .sum()
    }

    pub fn norms(&self) -> Norms {
        let (mut l2, mut grad, mut lap, mut hm1) = (0.0, 0.0, 0.0, 0.0);
        for (z, m) in self.coeffs.iter().zip(&self.basis.modes) {
            let a = z.norm_sqr();
            l2 += a;
            grad += m.lambda * a;
            lap += m.lambda * m.lambda * a;
            hm1 += a / m.lambda;
        }
        Norms {
            l2: l2.sqrt(),
            grad: grad.sqrt(),
            lap: lap.sqrt(),
            hminus1: hm1.sqrt(),
            h1: (l2 + grad).sqrt(),
            h2: (l2 + grad + lap).sqrt(),
        }
    }

    pub fn l2_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn h1_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.basis.modes)
            .map(|(z, m)| (1.0 + m.lambda) * z.norm_sqr())
            .sum()
    }

    pub fn h2_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.basis.modes)
            .map(|(z, m)| (1.0 + m.lambda + m.lambda * m.lambda) * z.norm_sqr())
            .sum()
    }

    pub fn l4_norm4(&self) -> f64 {
        self.basis.l4_norm4(&self.coeffs)
    }

    pub fn cubic_term(&self) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        self.basis.cubic_into(&self.coeffs, &mut out);
        self.with_coeffs(out)
    }

    pub fn mixed_grad_sq_integral(&self) -> f64 {
        self.basis.mixed_grad_sq(&self.coeffs)
    }

    /// Re-expresses the field on another basis over the same box, keeping
    /// shared modes and zero-filling the rest.
    pub fn embed(&self, target: &Arc<Basis>) -> Result<Self> {
        if self.basis.domain.lengths != target.domain.lengths {
            return Err(Error::DomainMismatch);
        }
        let mut out = target.zeros();
        for (z, m) in self.coeffs.iter().zip(&self.basis.modes) {
            if let Some(p) = target.position_of(m.index) {
                out.coeffs[p] = *z;
            }
        }
        Ok(out)
    }
}

/// Values at the interior nodes of a uniform grid (boundary values are zero).
#[derive(Debug, Clone)]
pub struct GridField {
    basis: Arc<Basis>,
    resolution: Vec<usize>,
    values: Vec<Complex64>,
}

impl GridField {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    /// Interior node coordinates in storage order.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let dom = &self.basis.domain;
        let h: Vec<f64> = (0..dom.dim()).map(|k| dom.lengths[k] / self.resolution[k] as f64).collect();
        if dom.dim() == 1 {
            (1..self.resolution[0]).map(|k| vec![k as f64 * h[0]]).collect()
        } else {
            let mut out = Vec::new();
            for k1 in 1..self.resolution[0] {
                for k2 in 1..self.resolution[1] {
                    out.push(vec![k1 as f64 * h[0], k2 as f64 * h[1]]);
                }
            }
            out
        }
    }

    /// Trapezoid L² norm squared on the grid.
    pub fn quadrature_l2_sq(&self) -> f64 {
        let dom = &self.basis.domain;
        let w: f64 = (0..dom.dim()).map(|k| dom.lengths[k] / self.resolution[k] as f64).product();
        w * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn basis_1d(l: usize) -> Arc<Basis> {
        Basis::new(BoxDomain::default_interval(l)).unwrap()
    }

    fn pseudo_random(basis: &Arc<Basis>, seed: u64) -> SpectralField {
        // Small LCG keeps the test independent of the crate's RNG plumbing.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        basis.field_from_fn(|m| Complex64::new(next(), next()) / m.lambda)
    }

    /// Direct evaluation of the sine series and its gradient at a point.
    fn eval_direct(w: &SpectralField, x: &[f64]) -> (Complex64, [Complex64; 2]) {
        let dom = w.basis().domain().clone();
        let mut val = Complex64::new(0.0, 0.0);
        let mut grad = [Complex64::new(0.0, 0.0); 2];
        for (z, m) in w.coeffs().iter().zip(w.basis().modes()) {
            let mut s = [1.0; 2];
            let mut ds = [0.0; 2];
            for k in 0..dom.dim() {
                let l = dom.lengths[k];
                let kk = m.index[k] as f64 * PI / l;
                s[k] = (2.0 / l).sqrt() * (kk * x[k]).sin();
                ds[k] = (2.0 / l).sqrt() * kk * (kk * x[k]).cos();
            }
            val += z * s[0] * s[1];
            grad[0] += z * ds[0] * s[1];
            grad[1] += z * s[0] * ds[1];
        }
        (val, grad)
    }

    /// Composite Gauss-Legendre (3-point) quadrature on [0, L], independent of
    /// the grid used by the implementation.
    fn gauss_1d(l: f64, cells: usize, f: impl Fn(f64) -> f64) -> f64 {
        let nodes = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
        let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let h = l / cells as f64;
        let mut acc = 0.0;
        for c in 0..cells {
            let mid = (c as f64 + 0.5) * h;
            for (x, w) in nodes.iter().zip(weights) {
                acc += w * f(mid + 0.5 * h * x) * 0.5 * h;
            }
        }
        acc
    }

    #[test]
    fn modes_are_ordered_by_eigenvalue() {
        let b = Basis::new(BoxDomain::rectangle([1.0, 2.0], [4, 5], [16, 20]).unwrap()).unwrap();
        let lambdas: Vec<f64> = b.lambdas().collect();
        assert!(lambdas.windows(2).all(|w| w[0] <= w[1]));
        assert!(lambdas.iter().all(|&l| l > 0.0));
        // (1,2) on a 1×2 box ties with nothing; (2,4) has λ = 4π²+4π² = (1,?)…
        let sq = Basis::new(BoxDomain::rectangle([1.0, 1.0], [3, 3], [12, 12]).unwrap()).unwrap();
        let p12 = sq.position_of([1, 2]).unwrap();
        let p21 = sq.position_of([2, 1]).unwrap();
        assert_eq!(p21, p12 + 1, "tie must be broken by the first index");
    }

    #[test]
    fn unit_mode_values() {
        let b = basis_1d(4);
        let g = b.synthesize(&b.unit(0), &[16]).unwrap();
        // node k=8 is x = π/2
        let mid = g.values()[7];
        assert!((mid.re - (2.0 / PI).sqrt()).abs() < 1e-15);
        let z = b.synthesize(&b.zeros(), &[16]).unwrap();
        assert!(z.values().iter().all(|v| v.norm() == 0.0));
        assert!(b.synthesize(&b.unit(0), &[3]).is_err());
    }

    #[test]
    fn analysis_isolates_sampled_mode() {
        let b = basis_1d(4);
        let w = b.project(|x| Complex64::new((2.0 * x[0]).sin(), 0.0), &[16]).unwrap();
        for (p, z) in w.coeffs().iter().enumerate() {
            if p == 1 {
                assert!((z.re - (PI / 2.0).sqrt()).abs() < 1e-14);
            } else {
                assert!(z.norm() < 1e-14);
            }
        }
        let g = b.synthesize(&w, &[7]).unwrap();
        assert!(b.analyze(&g).is_err(), "7 < 2·4 must be rejected");
    }

    #[test]
    fn norms_of_unit_modes() {
        let b = basis_1d(4);
        let n = b.unit(0).norms();
        for v in [n.l2, n.grad, n.lap, n.hminus1] {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert!((b.unit(2).norms().grad.powi(2) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_norm_matches_quadrature() {
        let b = basis_1d(12);
        let w = pseudo_random(&b, 3);
        let quad = gauss_1d(PI, 400, |x| {
            let (_, g) = eval_direct(&w, &[x]);
            g[0].norm_sqr()
        });
        assert!((w.norms().grad.powi(2) - quad).abs() < 1e-8 * quad.max(1.0));
    }

    #[test]
    fn l4_of_first_mode() {
        let b = basis_1d(8);
        let exact = 3.0 / (2.0 * PI);
        let e1 = b.unit(0);
        assert!((e1.l4_norm4() - exact).abs() < 1e-13);
        let quad = gauss_1d(PI, 200, |x| (2.0 / PI * x.sin().powi(2)).powi(2));
        assert!((quad - exact).abs() < 1e-10);
        let two = e1.scaled(Complex64::new(2.0, 0.0));
        assert!((two.l4_norm4() - 16.0 * e1.l4_norm4()).abs() < 1e-12);
        assert_eq!(b.zeros().l4_norm4(), 0.0);
    }

    #[test]
    fn l4_matches_dense_quadrature_for_random_field() {
        let b = basis_1d(10);
        let w = pseudo_random(&b, 11);
        let quad = gauss_1d(PI, 600, |x| eval_direct(&w, &[x]).0.norm_sqr().powi(2));
        assert!((w.l4_norm4() - quad).abs() < 1e-10 * quad.max(1.0));
    }

    #[test]
    fn cubic_term_matches_dense_quadrature() {
        let b = basis_1d(8);
        let e1 = b.unit(0);
        let c = e1.cubic_term();
        for (p, m) in b.modes().iter().enumerate() {
            let j = m.index[0] as f64;
            let quad = gauss_1d(PI, 400, |x| {
                let s = (2.0 / PI).sqrt() * x.sin();
                s * s * s * (2.0 / PI).sqrt() * (j * x).sin()
            });
            assert!((c.coeffs()[p].re - quad).abs() < 1e-8, "mode {j}");
            assert_eq!(c.coeffs()[p].im, 0.0);
        }
        // sin³ = (3 sin x − sin 3x)/4 only touches modes 1 and 3
        assert!(c.coeffs()[1].norm() < 1e-14 && c.coeffs()[2].norm() > 0.1);

        let w = pseudo_random(&b, 5);
        let cw = w.cubic_term();
        for (p, m) in b.modes().iter().enumerate() {
            let j = m.index[0] as f64;
            let re = gauss_1d(PI, 600, |x| {
                let (v, _) = eval_direct(&w, &[x]);
                ((v * v.norm_sqr()) * (2.0 / PI).sqrt() * (j * x).sin()).re
            });
            let im = gauss_1d(PI, 600, |x| {
                let (v, _) = eval_direct(&w, &[x]);
                ((v * v.norm_sqr()) * (2.0 / PI).sqrt() * (j * x).sin()).im
            });
            assert!((cw.coeffs()[p] - Complex64::new(re, im)).norm() < 1e-8);
        }
        assert!(b.zeros().cubic_term().is_zero());
    }

    #[test]
    fn mixed_gradient_integral() {
        let b = basis_1d(8);
        let e1 = b.unit(0);
        assert!((e1.mixed_grad_sq_integral() - 1.0 / (2.0 * PI)).abs() < 1e-13);
        let s = Complex64::new(0.6, -1.1);
        let scaled = e1.scaled(s);
        assert!((scaled.mixed_grad_sq_integral() - s.norm().powi(4) / (2.0 * PI)).abs() < 1e-12);
        assert_eq!(b.zeros().mixed_grad_sq_integral(), 0.0);

        let w = pseudo_random(&b, 9);
        let quad = gauss_1d(PI, 600, |x| {
            let (v, g) = eval_direct(&w, &[x]);
            v.norm_sqr() * g[0].norm_sqr()
        });
        assert!((w.mixed_grad_sq_integral() - quad).abs() < 1e-9 * quad.max(1.0));
    }

    #[test]
    fn two_dimensional_transforms() {
        let dom = BoxDomain::rectangle([1.0, 1.5], [4, 3], [16, 12]).unwrap();
        let b = Basis::new(dom).unwrap();
        let w = pseudo_random(&b, 21);
        let g = b.synthesize(&w, &[16, 12]).unwrap();
        for (x, val) in g.nodes().iter().zip(g.values()) {
            let (direct, _) = eval_direct(&w, x);
            assert!((direct - val).norm() < 1e-12);
        }
        let back = b.analyze(&g).unwrap();
        let err: f64 = back.sub(&w).unwrap().l2_sq().sqrt();
        assert!(err < 1e-12);
        // Parseval on the grid
        assert!((g.quadrature_l2_sq() - w.l2_sq()).abs() < 1e-12);

        // mixed gradient integral against a tensor Gauss rule
        let quad = {
            let mut acc = 0.0;
            let inner = |x: f64| {
                gauss_1d(1.5, 60, |y| {
                    let (v, gr) = eval_direct(&w, &[x, y]);
                    v.norm_sqr() * (gr[0].norm_sqr() + gr[1].norm_sqr())
                })
            };
            acc += gauss_1d(1.0, 60, inner);
            acc
        };
        assert!((w.mixed_grad_sq_integral() - quad).abs() < 1e-8 * quad.max(1.0));
    }

    #[test]
    fn poincare_chain() {
        let b = basis_1d(16);
        let w = pseudo_random(&b, 2);
        let n = w.norms();
        let l1 = b.lambda_min();
        assert!(n.hminus1 <= n.l2 / l1.sqrt() + 1e-15);
        assert!(n.l2 / l1.sqrt() <= n.grad / l1 + 1e-15);
    }

    #[test]
    fn embed_preserves_shared_modes() {
        let coarse = basis_1d(4);
        let fine = basis_1d(8);
        let w = pseudo_random(&coarse, 4);
        let e = w.embed(&fine).unwrap();
        assert!((e.norms().h1 - w.norms().h1).abs() < 1e-15);
        assert_eq!(&e.coeffs()[..4], w.coeffs());
    }

    proptest! {
        #[test]
        fn synthesis_round_trip(seed in 0u64..10_000, l in 1usize..24) {
            let b = basis_1d(l);
            let w = pseudo_random(&b, seed);
            let g = b.synthesize(&w, &[4 * l]).unwrap();
            let back = b.analyze(&g).unwrap();
            let scale = w.norms().l2.max(1e-300);
            prop_assert!(back.sub(&w).unwrap().norms().l2 <= 1e-12 * scale);
            prop_assert!((g.quadrature_l2_sq() - w.l2_sq()).abs() <= 1e-10 * w.l2_sq().max(1e-300));
        }

        #[test]
        fn norms_are_seminorms(s1 in 0u64..1000, s2 in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let b = basis_1d(12);
            let x = pseudo_random(&b, s1);
            let y = pseudo_random(&b, s2);
            let sum = x.add(&y).unwrap();
            let (nx, ny, ns) = (x.norms(), y.norms(), sum.norms());
            for (a, bb, c) in [(nx.l2, ny.l2, ns.l2), (nx.grad, ny.grad, ns.grad), (nx.lap, ny.lap, ns.lap),
                               (nx.hminus1, ny.hminus1, ns.hminus1), (nx.h1, ny.h1, ns.h1), (nx.h2, ny.h2, ns.h2)] {
                prop_assert!(c <= a + bb + 1e-12);
            }
            let s = Complex64::new(re, im);
            let scaled = x.scaled(s).norms();
            prop_assert!((scaled.h2 - s.norm() * nx.h2).abs() <= 1e-12 * (1.0 + nx.h2));
        }

        #[test]
        fn cubic_is_conjugate_equivariant(seed in 0u64..1000) {
            let b = basis_1d(8);
            let w = pseudo_random(&b, seed);
            let lhs = w.conj().cubic_term();
            let rhs = w.cubic_term().conj();
            prop_assert!(lhs.sub(&rhs).unwrap().norms().l2 <= 1e-14 * (1.0 + w.norms().l2.powi(3)));
        }

        #[test]
        fn young_bound(seed in 0u64..1000, kappa4 in 0.01f64..10.0, amp in 0.01f64..20.0) {
            let b = basis_1d(8);
            let w = pseudo_random(&b, seed).scaled(Complex64::new(amp, 0.0));
            let measure = b.domain().measure();
            prop_assert!(w.l2_sq() <= kappa4 * w.l4_norm4() + measure / (4.0 * kappa4) + 1e-12);
        }
    }
}
