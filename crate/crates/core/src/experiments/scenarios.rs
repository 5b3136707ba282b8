use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, InitialConfig, PairKind, Scenario};
use super::initial::{build_forcing, build_initial, seeded_initial_data, ManufacturedSource};
use crate::decomposition::{contraction_certificate, phi_split, pure_phi_pairs, ContractionReport, PhiSplit};
use crate::diagnostics::{
    absorbing_certificate, absorbing_fit, h2_monitor, holder_time_estimate, integral_monitor, lipschitz_fit,
    strict_decrease, Certificate, Diagnostics, DiagnosticsRecord,
};
use crate::dynamics::{Integrator, RunOptions, SystemState};
use crate::error::{Error, Result};
use crate::model::{Forcing, PhysParams};
use crate::spectral::{Basis, SpectralField};

/// Gap functional `D(t)` of one two-trajectory run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSeries {
    pub gap: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Everything a scenario produced.
#[derive(Debug, Clone, Serialize)]
pub struct ResultBundle {
    pub config: ExperimentConfig,
    /// Diagnostics of the primary trajectory.
    #[serde(skip)]
    pub series: Vec<DiagnosticsRecord>,
    /// Diagnostics of ensemble members, in member order.
    #[serde(skip)]
    pub members: Vec<Vec<DiagnosticsRecord>>,
    #[serde(skip)]
    pub decomposition: Option<PhiSplit>,
    #[serde(skip)]
    pub gap_series: Vec<GapSeries>,
    pub certificates: Vec<Certificate>,
    pub contraction: Option<ContractionReport>,
    pub notes: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl ResultBundle {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            config: config.clone(),
            series: Vec::new(),
            members: Vec::new(),
            decomposition: None,
            gap_series: Vec::new(),
            certificates: Vec::new(),
            contraction: None,
            notes: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }

    /// 0 when every certificate passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn certificate(&self, name: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.name == name)
    }
}

fn run_options(cfg: &ExperimentConfig) -> RunOptions {
    RunOptions {
        dt: cfg.integrator.dt,
        sample_stride: cfg.integrator.stride,
        guard: cfg.integrator.guard,
    }
}

struct Setup {
    basis: Arc<Basis>,
    forcing: Forcing,
    diag: Diagnostics,
    opts: RunOptions,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let basis = Basis::new(cfg.domain.clone())?;
    let forcing = build_forcing(&basis, &cfg.forcing)?;
    let diag = Diagnostics::new(cfg.params, cfg.weights, forcing.clone())?;
    Ok(Setup {
        basis,
        forcing,
        diag,
        opts: run_options(cfg),
    })
}

/// Integrates one trajectory and records diagnostics at every sample.
pub fn record_trajectory(
    params: &PhysParams,
    diag: &Diagnostics,
    s0: &SystemState,
    horizon: f64,
    opts: &RunOptions,
) -> Result<(Vec<DiagnosticsRecord>, SystemState)> {
    let mut integ = Integrator::new(*params, &diag.forcing)?;
    let mut records = Vec::new();
    let end = integ.integrate(s0, horizon, opts, |s, d| records.push(diag.record(s, d)))?;
    Ok((records, end))
}

/// Executes the scenario named in `cfg`.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    let start = Instant::now();
    let mut bundle = ResultBundle::new(cfg);
    bundle.notes.push(format!(
        "the |v_t|^2 coefficient of Upsilon_2 is the configured stand-in weight w_t = {}",
        cfg.weights.w_t
    ));
    match cfg.scenario {
        Scenario::SingleRun => single_run(cfg, &mut bundle)?,
        Scenario::TwoTrajectory => two_trajectory(cfg, &mut bundle)?,
        Scenario::Decomposition => decomposition(cfg, &mut bundle)?,
        Scenario::Convergence => convergence(cfg, &mut bundle)?,
        Scenario::AbsorbingEnsemble => absorbing_ensemble(cfg, &mut bundle)?,
        Scenario::CertificateSuite => certificate_suite(cfg, &mut bundle)?,
    }
    bundle.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(bundle)
}

fn single_run(cfg: &ExperimentConfig, bundle: &mut ResultBundle) -> Result<()> {
    let su = setup(cfg)?;
    let s0 = build_initial(&su.basis, &cfg.initial, cfg.seed)?;
    let (records, _) = record_trajectory(&cfg.params, &su.diag, &s0, cfg.integrator.horizon, &su.opts)?;
    bundle.certificates = trajectory_certificates(cfg, &records, su.forcing.is_zero());
    bundle.series = records;
    Ok(())
}

/// Certificates computed from one trajectory's diagnostics.
pub fn trajectory_certificates(cfg: &ExperimentConfig, records: &[DiagnosticsRecord], unforced: bool) -> Vec<Certificate> {
    let o = &cfg.options;
    let mut out = vec![residual_certificate(records, o.residual_tolerance)];
    let absorbing = single_absorbing(cfg, records, unforced);
    let settle = absorbing.get("absorbing_time").unwrap_or(f64::INFINITY);
    out.push(absorbing);
    out.push(h2_monitor(records, &[0.1, 1.0]));
    let horizon = records.last().map(|r| r.t - records[0].t).unwrap_or(0.0);
    let settle = if settle.is_finite() { settle.max(1.0) } else { 1.0 };
    out.push(integral_monitor(records, settle.min((horizon - 1.0).max(0.0)), o.window_growth));
    out.push(young_certificate(records, cfg.weights.kappa4, cfg.domain.measure()));
    out
}

fn residual_certificate(records: &[DiagnosticsRecord], tol: f64) -> Certificate {
    let mut c = Certificate::new(
        "identity-residuals",
        "energy identities for |phi|^2, |grad phi|^2 and |v|^2 hold with residual <= tol*(1 + E2)",
    );
    let worst = records.iter().map(|r| r.relative_residual()).fold(0.0, f64::max);
    c.set("max_relative_residual", worst);
    c.tolerance = tol;
    c.samples = records.len();
    c.worst_margin = worst - tol;
    c.passed = !records.is_empty() && worst <= tol;
    c
}

fn young_certificate(records: &[DiagnosticsRecord], kappa4: f64, measure: f64) -> Certificate {
    let mut c = Certificate::new("young-bound", "|v|^2 <= kappa4*|v|_{L4}^4 + |Omega|/(4*kappa4)");
    let worst = records
        .iter()
        .map(|r| r.l2_v * r.l2_v - kappa4 * r.l4_v4 - measure / (4.0 * kappa4))
        .fold(f64::NEG_INFINITY, f64::max);
    c.set("kappa4", kappa4);
    c.samples = records.len();
    c.worst_margin = worst;
    c.passed = !records.is_empty() && worst <= 0.0;
    c
}

fn single_absorbing(cfg: &ExperimentConfig, records: &[DiagnosticsRecord], unforced: bool) -> Certificate {
    let refs: Vec<&DiagnosticsRecord> = records.iter().collect();
    let fit = match absorbing_fit(&refs, cfg.params.d_i) {
        Ok(f) => f,
        Err(e) => {
            let mut c = Certificate::new("absorbing-ball", "dE1/dt + C5*E1 + (d_i/4)*|v_t|^2 <= C6");
            c.note(format!("fit unavailable: {e}"));
            c.samples = records.len();
            return c;
        }
    };
    let scale = records.iter().map(|r| r.e1).fold(0.0, f64::max);
    let mut c = absorbing_certificate(&fit, cfg.options.absorbing_tolerance, scale);
    let e1_0 = records[0].e1;
    c.set("absorbing_time", fit.absorbing_time(e1_0));
    if unforced && !fit.degenerate {
        let e1: Vec<f64> = records.iter().map(|r| r.e1).collect();
        let (strict, worst) = strict_decrease(&e1);
        c.set("e1_max_increment", worst);
        // exponential envelope E₁(t) ≤ E₁(0) e^{−C₅ t}
        let t0 = records[0].t;
        let env = records
            .iter()
            .map(|r| r.e1 / (e1_0 * (-fit.c5 * (r.t - t0)).exp()) - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        c.set("decay_envelope_excess", env);
        if !strict {
            c.passed = false;
            c.note("E1 is not strictly decreasing along the unforced run");
        }
        if env > cfg.options.absorbing_tolerance {
            c.passed = false;
            c.note("E1 exceeds E1(0)*exp(-C5*t)");
        }
    }
    c
}

fn decomposition(cfg: &ExperimentConfig, bundle: &mut ResultBundle) -> Result<()> {
    let su = setup(cfg)?;
    let s0 = build_initial(&su.basis, &cfg.initial, cfg.seed)?;
    let mut integ = Integrator::new(cfg.params, &su.forcing)?;
    let mut records = Vec::new();
    let (_, split) = phi_split(&mut integ, &s0, cfg.integrator.horizon, &su.opts, |s, d| {
        records.push(su.diag.record(s, d))
    })?;
    bundle.certificates = vec![
        stable_decay_certificate(cfg, &split, s0.phi.h1_sq().sqrt()),
        residual_certificate(&records, cfg.options.residual_tolerance),
    ];
    bundle.series = records;
    bundle.decomposition = Some(split);
    Ok(())
}

fn stable_decay_certificate(cfg: &ExperimentConfig, split: &PhiSplit, phi0_h1: f64) -> Certificate {
    let o = &cfg.options;
    let mut c = Certificate::new(
        "stable-decay",
        "|phi_d(t)|_{H1} = exp(-gamma*t)*|phi_0|_{H1}; phi = phi_d + phi_c with phi_c smooth",
    );
    let scale = if phi0_h1 > 0.0 { phi0_h1 } else { 1.0 };
    let exact = split.exact_deviation();
    let stepped = split.stepped_deviation();
    let gap = split.max_route_gap() / scale;
    let defect = split.sum_defect_h1.iter().copied().fold(0.0, f64::max);
    let sup_h2 = split.sup_phic_h2_after(o.compact_burn_in);
    c.set("exact_deviation", exact);
    c.set("stepped_deviation", stepped);
    c.set("route_gap", gap);
    c.set("split_defect", defect);
    c.set(&format!("sup_phic_h2_after_{}", o.compact_burn_in), sup_h2);
    c.set("gamma", cfg.params.gamma);
    c.tolerance = o.exact_tolerance;
    c.samples = split.times.len();
    c.worst_margin = (exact - o.exact_tolerance)
        .max(stepped - o.stepped_tolerance)
        .max(gap - o.route_tolerance)
        .max(defect - 1e-9);
    c.passed = c.worst_margin <= 0.0 && sup_h2.is_finite() && c.samples > 0;
    if gap > o.route_tolerance {
        c.note("the two routes for phi_c disagree beyond tolerance");
    }
    c
}

/// Samples of one trajectory kept for gap computations.
struct Samples {
    times: Vec<f64>,
    v: Vec<SpectralField>,
    phi: Vec<SpectralField>,
    dv: Vec<SpectralField>,
}

fn sample_states(params: &PhysParams, forcing: &Forcing, s0: &SystemState, horizon: f64, opts: &RunOptions) -> Result<Samples> {
    let mut integ = Integrator::new(*params, forcing)?;
    let mut out = Samples {
        times: Vec::new(),
        v: Vec::new(),
        phi: Vec::new(),
        dv: Vec::new(),
    };
    integ.integrate(s0, horizon, opts, |s, d| {
        out.times.push(s.t);
        out.v.push(s.v.clone());
        out.phi.push(s.phi.clone());
        out.dv.push(d.dv.clone());
    })?;
    Ok(out)
}

/// `D(t) = ‖Δv‖²_{H¹} + ‖Δφ‖²_{H¹} + ∫₀ᵗ ‖Δv_t‖²` with the trapezoid rule
/// on the samples.
fn gap_functional(a: &Samples, b: &Samples) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(a.times.len());
    let mut integral = 0.0;
    let mut prev: Option<f64> = None;
    for k in 0..a.times.len() {
        let rate = a.dv[k].sub(&b.dv[k])?.l2_sq();
        if let Some(p) = prev {
            integral += 0.5 * (a.times[k] - a.times[k - 1]) * (p + rate);
        }
        prev = Some(rate);
        out.push(a.v[k].sub(&b.v[k])?.h1_sq() + a.phi[k].sub(&b.phi[k])?.h1_sq() + integral);
    }
    Ok(out)
}

/// Unit-norm seeded perturbation direction.
fn perturbation(basis: &Arc<Basis>, seed: u64) -> Result<(SpectralField, SpectralField)> {
    seeded_initial_data(basis, 1.0, 1.5, seed ^ 0x9E37_79B9_7F4A_7C15)
}

fn lipschitz_runs(
    cfg: &ExperimentConfig,
    basis: &Arc<Basis>,
    forcing: &Forcing,
    s0: &SystemState,
    gaps: &[f64],
    horizon: f64,
) -> Result<Vec<GapSeries>> {
    let opts = run_options(cfg);
    let (dv, dphi) = perturbation(basis, cfg.seed)?;
    let base = sample_states(&cfg.params, forcing, s0, horizon, &opts)?;
    gaps.par_iter()
        .map(|&g| {
            let other = SystemState::new(s0.v.axpy(g, &dv)?, s0.phi.axpy(g, &dphi)?, s0.t)?;
            let run = sample_states(&cfg.params, forcing, &other, horizon, &opts)?;
            Ok(GapSeries {
                gap: g,
                times: base.times.clone(),
                values: gap_functional(&base, &run)?,
            })
        })
        .collect()
}

fn lipschitz_certificate(series: &[GapSeries]) -> Result<Certificate> {
    let mut c = Certificate::new("lipschitz", "D(t) <= L1*exp(L2*t)*D(0) for every initial gap");
    let mut worst = f64::NEG_INFINITY;
    let mut ok = !series.is_empty();
    for s in series {
        let fit = lipschitz_fit(&s.times, &s.values)?;
        c.set(&format!("L1_gap_{:e}", s.gap), fit.l1);
        c.set(&format!("L2_gap_{:e}", s.gap), fit.l2);
        c.set(&format!("final_ratio_gap_{:e}", s.gap), fit.final_ratio);
        worst = worst.max(fit.worst_ratio - 1.0);
        ok &= fit.l1 >= 0.0 && fit.l2 >= 0.0 && fit.l1.is_finite() && fit.l2.is_finite() && fit.final_ratio.is_finite();
        c.samples += fit.samples;
    }
    c.tolerance = 1e-12;
    c.worst_margin = worst;
    c.passed = ok && worst <= 1e-12;
    Ok(c)
}

fn gap_linearity_certificate(series: &[GapSeries], spread_tol: f64) -> Certificate {
    let mut c = Certificate::new(
        "gap-linearity",
        "D(T)/D(0) is independent of the initial gap size to first order",
    );
    let ratios: Vec<f64> = series
        .iter()
        .map(|s| s.values.last().copied().unwrap_or(f64::NAN) / s.values[0])
        .collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo;
    c.set("min_ratio", lo);
    c.set("max_ratio", hi);
    c.set("relative_spread", spread);
    c.tolerance = spread_tol;
    c.samples = ratios.len();
    c.worst_margin = spread - spread_tol;
    c.passed = spread.is_finite() && spread <= spread_tol;
    c
}

fn two_trajectory(cfg: &ExperimentConfig, bundle: &mut ResultBundle) -> Result<()> {
    let su = setup(cfg)?;
    let s0 = build_initial(&su.basis, &cfg.initial, cfg.seed)?;
    let (records, _) = record_trajectory(&cfg.params, &su.diag, &s0, cfg.integrator.horizon, &su.opts)?;
    let series = lipschitz_runs(cfg, &su.basis, &su.forcing, &s0, &cfg.options.gaps, cfg.integrator.horizon)?;
    bundle.certificates.push(lipschitz_certificate(&series)?);
    if series.len() > 1 {
        bundle
            .certificates
            .push(gap_linearity_certificate(&series, cfg.options.gap_spread));
    }
    bundle.series = records;
    bundle.gap_series = series;
    Ok(())
}

/// Integrates analytic initial data at each mode count and checks that
/// consecutive `H¹` differences at `refine_time` shrink by the configured
/// factor.
pub fn galerkin_refinement(cfg: &ExperimentConfig, levels: &[usize]) -> Result<Certificate> {
    if levels.len() < 2 || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("need at least two increasing levels".into()));
    }
    let initial = match &cfg.initial {
        InitialConfig::Seeded { .. } => {
            return Err(Error::InvalidArgument(
                "refinement needs analytic initial data (bump, modes or zero); seeded data is too rough".into(),
            ))
        }
        other => other.clone(),
    };
    let dim = cfg.domain.dim();
    let o = &cfg.options;
    let opts = RunOptions {
        sample_stride: usize::MAX,
        ..run_options(cfg)
    };
    let finals: Vec<SystemState> = levels
        .par_iter()
        .map(|&l| {
            let domain = cfg.domain.with_modes(&vec![l; dim])?;
            let basis = Basis::new(domain)?;
            let forcing = build_forcing(&basis, &cfg.forcing)?;
            let s0 = build_initial(&basis, &initial, cfg.seed)?;
            let mut integ = Integrator::new(cfg.params, &forcing)?;
            integ.integrate(&s0, o.refine_time, &opts, |_, _| {})
        })
        .collect::<Result<_>>()?;
    let mut c = Certificate::new(
        "galerkin-refinement",
        "|z_{2l}(T) - z_l(T)|_{H1} shrinks by the contraction factor per refinement",
    );
    let mut diffs = Vec::new();
    for k in 0..finals.len() - 1 {
        let fine = finals[k + 1].basis();
        let (dv, dp) = finals[k + 1].difference(&SystemState::new(
            finals[k].v.embed(fine)?,
            finals[k].phi.embed(fine)?,
            finals[k].t,
        )?)?;
        let d = (dv.h1_sq() + dp.h1_sq()).sqrt();
        c.set(&format!("diff_{}_{}", levels[k], levels[k + 1]), d);
        diffs.push(d);
    }
    let scale = 1.0 + finals.last().map(|s| s.h1_pair()).unwrap_or(0.0);
    let resolved = |d: f64| d <= 1e-12 * scale;
    let mut worst = f64::NEG_INFINITY;
    for (k, w) in diffs.windows(2).enumerate() {
        let ratio = if resolved(w[1]) { 0.0 } else { w[1] / w[0] };
        c.set(&format!("ratio_{}", k + 1), ratio);
        worst = worst.max(ratio - o.refine_contraction);
    }
    c.tolerance = o.refine_contraction;
    c.samples = levels.len();
    c.worst_margin = if diffs.len() < 2 {
        diffs[0] - 1e-12 * scale
    } else {
        worst
    };
    c.passed = diffs.iter().all(|d| d.is_finite()) && c.worst_margin < 0.0 || diffs.iter().all(|&d| resolved(d));
    if diffs.len() < 2 {
        c.note("two levels give one difference; pass requires it to vanish");
    }
    Ok(c)
}

/// Step-halving study on the manufactured solution `v = φ = e^{−t} e₁`.
pub fn temporal_order(cfg: &ExperimentConfig) -> Result<Certificate> {
    let o = &cfg.options;
    let basis = Basis::new(cfg.domain.clone())?;
    let src = ManufacturedSource::new(&cfg.params, &basis)?;
    let steps: Vec<f64> = (0..o.order_levels).map(|k| o.order_dt / f64::powi(2.0, k as i32)).collect();
    let exact = src.exact(o.order_time);
    let errors: Vec<f64> = steps
        .par_iter()
        .map(|&dt| {
            let mut integ = Integrator::with_source(cfg.params, Arc::clone(&basis), &src)?;
            let opts = RunOptions {
                dt,
                sample_stride: usize::MAX,
                guard: cfg.integrator.guard,
            };
            let end = integ.integrate(&src.exact(0.0), o.order_time, &opts, |_, _| {})?;
            let (dv, dp) = end.difference(&exact)?;
            Ok((dv.h1_sq() + dp.h1_sq()).sqrt())
        })
        .collect::<Result<_>>()?;
    // least-squares slope of ln(error) against ln(dt)
    let xs: Vec<f64> = steps.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let order = sxy / sxx;
    let mut c = Certificate::new("temporal-order", "|z_dt(T) - z(T)|_{H1} = O(dt^2) on a manufactured solution");
    for (k, (dt, e)) in steps.iter().zip(&errors).enumerate() {
        c.set(&format!("dt_{k}"), *dt);
        c.set(&format!("error_{k}"), *e);
    }
    c.set("order", order);
    c.tolerance = o.order_max - o.order_min;
    c.samples = steps.len();
    c.worst_margin = (o.order_min - order).max(order - o.order_max);
    c.passed = order.is_finite() && order >= o.order_min && order <= o.order_max;
    Ok(c)
}

fn convergence(cfg: &ExperimentConfig, bundle: &mut ResultBundle) -> Result<()> {
    bundle
        .certificates
        .push(galerkin_refinement(cfg, &cfg.options.levels)?);
    bundle.certificates.push(temporal_order(cfg)?);
    Ok(())
}

fn member_decay(cfg: &ExperimentConfig) -> f64 {
    match cfg.initial {
        InitialConfig::Seeded { decay, .. } => decay,
        _ => 1.5,
    }
}

fn absorbing_ensemble(cfg: &ExperimentConfig, bundle: &mut ResultBundle) -> Result<()> {
    let su = setup(cfg)?;
    let o = &cfg.options;
    let decay = member_decay(cfg);
    let members: Vec<Vec<DiagnosticsRecord>> = (0..o.members)
        .into_par_iter()
        .map(|k| {
            let radius = o.radii[k % o.radii.len()];
            let (v, phi) = seeded_initial_data(&su.basis, radius, decay, cfg.seed.wrapping_add(1 + k as u64))?;
            let s0 = SystemState::new(v, phi, 0.0)?;
            Ok(record_trajectory(&cfg.params, &su.diag, &s0, cfg.integrator.horizon, &su.opts)?.0)
        })
        .collect::<Result<_>>()?;
    let all: Vec<DiagnosticsRecord> = members.iter().flatten().copied().collect();
    bundle
        .certificates
        .push(residual_certificate(&all, o.residual_tolerance));
    bundle
        .certificates
        .push(ensemble_absorbing(cfg, &members, su.forcing.is_zero())?);
    bundle.series = members[0].clone();
    bundle.members = members;
    Ok(())
}

fn ensemble_absorbing(cfg: &ExperimentConfig, members: &[Vec<DiagnosticsRecord>], unforced: bool) -> Result<Certificate> {
    let refs: Vec<&DiagnosticsRecord> = members.iter().flatten().collect();
    let fit = absorbing_fit(&refs, cfg.params.d_i)?;
    let scale = refs.iter().map(|r| r.e1).fold(0.0, f64::max);
    let mut c = absorbing_certificate(&fit, cfg.options.absorbing_tolerance, scale);
    c.set("members", members.len() as f64);
    if unforced {
        // The ball shrinks to the origin; check the exponential envelope
        // E₁(t) ≤ E₁(0) e^{−C₅ t} for every member instead.
        let mut worst = f64::NEG_INFINITY;
        for m in members {
            let (e0, t0) = (m[0].e1, m[0].t);
            if e0 == 0.0 {
                continue;
            }
            for r in m {
                worst = worst.max(r.e1 / (e0 * (-fit.c5 * (r.t - t0)).exp()) - 1.0);
            }
        }
        c.set("decay_envelope_excess", worst);
        if worst > cfg.options.absorbing_tolerance {
            c.passed = false;
            c.note("a member leaves the exponential envelope");
        }
        c.note("unforced ensemble: uniform decay checked in place of ball entry");
        return Ok(c);
    }
    let t_abs = members
        .iter()
        .map(|m| fit.absorbing_time(m[0].e1))
        .fold(0.0, f64::max);
    let t_end = members.iter().map(|m| m.last().map(|r| r.t).unwrap_or(0.0)).fold(f64::INFINITY, f64::min);
    let mut checked = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for m in members {
        for r in m.iter().filter(|r| r.t >= t_abs) {
            checked += 1;
            worst = worst.max(r.e2 - fit.r0);
        }
    }
    c.set("absorbing_time", t_abs);
    c.set("max_e2_excess_after_absorption", worst);
    c.set("samples_after_absorption", checked as f64);
    if !(t_abs < t_end) {
        c.passed = false;
        c.note("fitted absorbing time lies beyond the horizon");
    }
    if worst > 0.0 {
        c.passed = false;
        c.note("a member leaves the ball E2 <= R0 after the absorbing time");
    }
    Ok(c)
}

fn certificate_suite(cfg: &ExperimentConfig, bundle: &mut ResultBundle) -> Result<()> {
    let su = setup(cfg)?;
    let o = &cfg.options;
    let s0 = build_initial(&su.basis, &cfg.initial, cfg.seed)?;

    let mut integ = Integrator::new(cfg.params, &su.forcing)?;
    let mut records = Vec::new();
    let (_, split) = phi_split(&mut integ, &s0, cfg.integrator.horizon, &su.opts, |s, d| {
        records.push(su.diag.record(s, d))
    })?;
    bundle.certificates = trajectory_certificates(cfg, &records, su.forcing.is_zero());
    bundle
        .certificates
        .push(stable_decay_certificate(cfg, &split, s0.phi.h1_sq().sqrt()));

    let gaps = lipschitz_runs(cfg, &su.basis, &su.forcing, &s0, &[o.lipschitz_gap], o.lipschitz_time)?;
    bundle.certificates.push(lipschitz_certificate(&gaps)?);

    let (report, burned) = contraction_run(cfg, &su)?;
    bundle.certificates.push(contraction_certificate_of(&report, &cfg.params));
    let t_star = report.t_star.unwrap_or(1.0);
    bundle.contraction = Some(report);
    bundle.certificates.push(holder_certificate(cfg, &su, &burned, t_star)?);

    let refine_cfg = ExperimentConfig {
        initial: InitialConfig::Bump {
            center: cfg.domain.lengths.iter().map(|l| l / 2.0).collect(),
            width: std::f64::consts::PI / 16.0,
            amplitude: 1.0,
        },
        ..cfg.clone()
    };
    bundle.certificates.push(galerkin_refinement(&refine_cfg, &o.levels)?);
    bundle.certificates.push(temporal_order(cfg)?);
    bundle.series = records;
    bundle.decomposition = Some(split);
    Ok(())
}

/// Burns in a seeded ensemble and runs the contraction check on its pairs.
/// Returns the report and the first burned-in state.
fn contraction_run(cfg: &ExperimentConfig, su: &Setup) -> Result<(ContractionReport, SystemState)> {
    let o = &cfg.options;
    let radius = match cfg.initial {
        InitialConfig::Seeded { radius, .. } if radius > 0.0 => radius,
        _ => 2.0,
    };
    let decay = member_decay(cfg);
    let count = match o.pair_kind {
        PairKind::PurePhi => o.pairs,
        PairKind::Independent => 2 * o.pairs,
    };
    let end_opts = RunOptions {
        sample_stride: usize::MAX,
        ..su.opts
    };
    let burned: Vec<SystemState> = (0..count)
        .into_par_iter()
        .map(|k| {
            let (v, phi) = seeded_initial_data(&su.basis, radius, decay, cfg.seed.wrapping_add(1000 + k as u64))?;
            let mut integ = Integrator::new(cfg.params, &su.forcing)?;
            let mut end = integ.integrate(&SystemState::new(v, phi, 0.0)?, o.burn_in, &end_opts, |_, _| {})?;
            end.t = 0.0;
            Ok(end)
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(SystemState, SystemState)> = match o.pair_kind {
        PairKind::PurePhi => {
            let pert: Vec<SpectralField> = (0..o.pairs)
                .map(|k| {
                    let (_, dphi) = perturbation(&su.basis, cfg.seed.wrapping_add(2000 + k as u64))?;
                    let n = dphi.h1_sq().sqrt();
                    Ok(dphi.scaled(num_complex::Complex64::new(o.pair_gap / n, 0.0)))
                })
                .collect::<Result<_>>()?;
            pure_phi_pairs(&burned, &pert)
        }
        PairKind::Independent => burned.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect(),
    };
    let report = contraction_certificate(&pairs, &cfg.params, &su.forcing, o.lambda_target, o.contraction_horizon, &su.opts)?;
    Ok((report, burned[0].clone()))
}

fn contraction_certificate_of(report: &ContractionReport, p: &PhysParams) -> Certificate {
    let mut c = Certificate::new(
        "contraction",
        "|(v_d, phi_d)(t*)|_{H1} <= lambda*|z0|_{H1} with lambda < 1/2 and |(v_c, phi_c)(t*)|_{H2} <= Lambda*|z0|_{H1}",
    );
    c.set("t_star", report.t_star.unwrap_or(f64::NAN));
    c.set("lambda", report.lambda);
    c.set("Lambda", report.big_lambda);
    c.set("lambda_target", report.lambda_target);
    c.set("gamma1", report.gamma1);
    c.set("boson_decay_time", (1.0 / report.lambda_target).ln() / p.gamma);
    c.set("sample_interval", report.sample_interval);
    c.tolerance = report.lambda_target;
    c.samples = report.pairs;
    c.worst_margin = report.lambda - report.lambda_target;
    c.passed = report.passed;
    if report.t_star.is_none() {
        c.note("no contraction time within the horizon; lambda is the best value reached");
    }
    if report.degenerate_pairs > 0 {
        c.note(format!("{} pairs with zero initial gap ignored", report.degenerate_pairs));
    }
    c
}

fn holder_certificate(cfg: &ExperimentConfig, su: &Setup, start: &SystemState, t_star: f64) -> Result<Certificate> {
    let mut integ = Integrator::new(cfg.params, &su.forcing)?;
    let skip = RunOptions {
        sample_stride: usize::MAX,
        ..su.opts
    };
    let at_t_star = integ.integrate(start, t_star, &skip, |_, _| {})?;
    let mut samples = Vec::new();
    integ.integrate(&at_t_star, t_star, &su.opts, |s, _| samples.push((s.t, s.v.clone(), s.phi.clone())))?;
    let est = holder_time_estimate(&samples)?;
    let mut c = Certificate::new(
        "holder",
        "|z(t) - z(s)|_{H1} <= H*|t - s|^{1/2} on [t*, 2t*] after burn-in",
    );
    c.set("sup", est.sup);
    c.set("argmax_s", est.argmax.0);
    c.set("argmax_t", est.argmax.1);
    c.set("window_start", at_t_star.t);
    c.set("window_end", at_t_star.t + t_star);
    c.samples = est.pairs;
    c.worst_margin = 0.0;
    c.passed = est.sup.is_finite();
    c.note("the Holder constant is reported, not thresholded");
    Ok(c)
}
