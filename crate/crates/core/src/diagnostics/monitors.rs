//! Fits and monitors that turn sampled trajectories into certificates.

use serde::{Deserialize, Serialize};

use super::certificate::Certificate;
use super::fit::{envelope, minimize_envelope, Line};
use super::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Constants of the absorbing-ball inequality fitted to samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingFit {
    pub c5: f64,
    pub c6: f64,
    /// `min E₁/E₂` over the samples.
    pub c7: f64,
    /// `max E₁/E₂` over the samples.
    pub c8: f64,
    /// `2 C₆ / (C₅ C₇)`.
    pub r0: f64,
    /// `max_k (dE₁/dt + C₅E₁ + (d_i/4)‖v_t‖² − C₆)`; nonpositive when feasible.
    pub margin: f64,
    pub feasible: bool,
    /// All samples were the zero state.
    pub degenerate: bool,
    pub samples: usize,
}

impl AbsorbingFit {
    /// Time after which `E₁(t) ≤ 2C₆/C₅` follows from `E₁(t) ≤ e^{−C₅t}E₁(0) + C₆/C₅`.
    pub fn absorbing_time(&self, e1_initial: f64) -> f64 {
        if e1_initial <= 0.0 {
            return 0.0;
        }
        if self.c6 <= 0.0 {
            return f64::INFINITY;
        }
        ((e1_initial * self.c5 / self.c6).ln() / self.c5).max(0.0)
    }
}

/// Fits the smallest absorbing radius `C₆/C₅` such that
/// `dE₁/dt + C₅E₁ + (d_i/4)‖v_t‖² ≤ C₆` at every sample.
///
/// With `s = 1/C₅` and `R = C₆/C₅` the constraints read
/// `E₁ + s(dE₁/dt + (d_i/4)‖v_t‖²) ≤ R`, `R ≥ 0`, so the minimal `R` is the
/// minimum over `s > 0` of an upper envelope of lines. Among minimizers the
/// smallest `s` (fastest rate) is kept.
pub fn absorbing_fit(records: &[&DiagnosticsRecord], d_i: f64) -> Result<AbsorbingFit> {
    const MIN_SAMPLES: usize = 50;
    if records.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            have: records.len(),
            need: MIN_SAMPLES,
        });
    }
    if records.iter().any(|r| !(r.e1.is_finite() && r.de1.is_finite() && r.nvt.is_finite())) {
        return Err(Error::NonFinite("energy samples"));
    }
    let rate = |r: &DiagnosticsRecord| r.de1 + d_i / 4.0 * r.nvt * r.nvt;

    let (c7, c8) = records
        .iter()
        .filter(|r| r.e2 > 0.0)
        .map(|r| r.e1 / r.e2)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), q| (lo.min(q), hi.max(q)));

    if records.iter().all(|r| r.e1 == 0.0 && rate(r) == 0.0) {
        return Ok(AbsorbingFit {
            c5: 1.0,
            c6: 0.0,
            c7: if c7.is_finite() { c7 } else { f64::NAN },
            c8: if c7.is_finite() { c8 } else { f64::NAN },
            r0: 0.0,
            margin: 0.0,
            feasible: true,
            degenerate: true,
            samples: records.len(),
        });
    }

    let mut lines: Vec<Line> = records.iter().map(|r| Line::new(rate(r), r.e1)).collect();
    lines.push(Line::new(0.0, 0.0));
    let (s, big_r) = minimize_envelope(&lines, 0.0).expect("the zero line bounds the envelope");
    if !(s > 0.0) {
        return Ok(AbsorbingFit {
            c5: 0.0,
            c6: f64::INFINITY,
            c7,
            c8,
            r0: f64::INFINITY,
            margin: f64::INFINITY,
            feasible: false,
            degenerate: false,
            samples: records.len(),
        });
    }
    let c5 = 1.0 / s;
    let c6 = big_r.max(0.0) * c5;
    let margin = records
        .iter()
        .map(|r| rate(r) + c5 * r.e1 - c6)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(AbsorbingFit {
        c5,
        c6,
        c7,
        c8,
        r0: 2.0 * c6 / (c5 * c7),
        margin,
        feasible: true,
        degenerate: false,
        samples: records.len(),
    })
}

/// Wraps an [`AbsorbingFit`] as a certificate with a relative tolerance on
/// the violation margin.
pub fn absorbing_certificate(fit: &AbsorbingFit, tolerance: f64, scale: f64) -> Certificate {
    let mut c = Certificate::new(
        "absorbing-ball",
        "dE1/dt + C5*E1 + (d_i/4)*|v_t|^2 <= C6 at every sample; R0 = 2*C6/(C5*C7) with C7*E2 <= E1 <= C8*E2",
    )
    .with("C5", fit.c5)
    .with("C6", fit.c6)
    .with("C7", fit.c7)
    .with("C8", fit.c8)
    .with("R0", fit.r0);
    c.tolerance = tolerance;
    c.samples = fit.samples;
    c.worst_margin = fit.margin / scale.max(1.0);
    c.passed = fit.feasible && fit.c5 > 0.0 && fit.c6 >= 0.0 && c.worst_margin <= tolerance;
    if fit.degenerate {
        c.note("all samples are the zero state; C5 = 1, C6 = 0 by convention");
    }
    if !fit.feasible {
        c.note("no positive decay rate fits the samples");
    }
    c
}

/// Whether `values` strictly decrease from sample to sample; returns the
/// largest increment (negative when strictly decreasing).
pub fn strict_decrease(values: &[f64]) -> (bool, f64) {
    let worst = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    (values.len() < 2 || worst < 0.0, worst)
}

/// `sup_{t ≥ r} ‖v(t)‖_{H²}` for each burn-in `r`.
pub fn h2_monitor(records: &[DiagnosticsRecord], burn_ins: &[f64]) -> Certificate {
    let mut c = Certificate::new("h2-regularization", "sup_{t >= r} |v(t)|_{H2} <= C*(1 + 1/r)");
    let t0 = records.first().map(|r| r.t).unwrap_or(0.0);
    let mut sups = Vec::new();
    for &r in burn_ins {
        let sup = records
            .iter()
            .filter(|rec| rec.t >= t0 + r - 1e-12)
            .map(|rec| rec.h2_v)
            .fold(f64::NEG_INFINITY, f64::max);
        c.set(&format!("sup_h2_after_{r}"), sup);
        sups.push((r, sup));
    }
    c.samples = records.len();
    let finite = sups.iter().all(|(_, s)| s.is_finite());
    let mut sorted = sups.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let nested = sorted.windows(2).all(|w| w[1].1 <= w[0].1);
    c.worst_margin = sorted.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    c.passed = finite && nested && !sups.is_empty();
    if sups.iter().any(|(_, s)| *s == f64::NEG_INFINITY) {
        c.passed = false;
        c.note("no samples after the burn-in");
    }
    c
}

/// Sliding-window integrals `∫_t^{t+w} (‖v_t‖²_{H¹} + ‖φ_t‖²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowIntegral {
    /// Window start times.
    pub starts: Vec<f64>,
    pub values: Vec<f64>,
}

impl WindowIntegral {
    /// Trapezoid rule on the samples; the window end is located by linear
    /// interpolation of the cumulative integral.
    pub fn compute(records: &[DiagnosticsRecord], window: f64) -> Self {
        let n = records.len();
        let mut cum = vec![0.0; n];
        let g = |r: &DiagnosticsRecord| r.nvt_h1 * r.nvt_h1 + r.nphit * r.nphit;
        for k in 1..n {
            let dt = records[k].t - records[k - 1].t;
            cum[k] = cum[k - 1] + 0.5 * dt * (g(&records[k]) + g(&records[k - 1]));
        }
        let cum_at = |t: f64| -> f64 {
            let idx = records.partition_point(|r| r.t < t);
            if idx == 0 {
                return cum[0];
            }
            if idx >= n {
                return cum[n - 1];
            }
            let (ta, tb) = (records[idx - 1].t, records[idx].t);
            let w = if tb > ta { (t - ta) / (tb - ta) } else { 1.0 };
            cum[idx - 1] + w * (cum[idx] - cum[idx - 1])
        };
        let t_end = records.last().map(|r| r.t).unwrap_or(0.0);
        let mut starts = Vec::new();
        let mut values = Vec::new();
        for (k, r) in records.iter().enumerate() {
            if r.t + window > t_end + 1e-9 * window {
                break;
            }
            starts.push(r.t);
            values.push(cum_at(r.t + window) - cum[k]);
        }
        Self { starts, values }
    }
}

/// Uniform-in-time bound on the window integral, with stabilization of its
/// running maximum after `settle` time units.
pub fn integral_monitor(records: &[DiagnosticsRecord], settle: f64, growth_tolerance: f64) -> Certificate {
    let mut c = Certificate::new(
        "window-integral",
        "int_t^{t+1} (|v_t|_{H1}^2 + |phi_t|^2) ds <= C uniformly in t",
    );
    let w = WindowIntegral::compute(records, 1.0);
    c.tolerance = growth_tolerance;
    c.samples = w.values.len();
    if w.values.is_empty() {
        c.note("run shorter than one window");
        return c;
    }
    let t0 = w.starts[0];
    let max_all = w.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let at_settle = w
        .starts
        .iter()
        .zip(&w.values)
        .filter(|(t, _)| **t <= t0 + settle + 1e-12)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    c.set("window_max", max_all);
    c.set("running_max_at_settle", at_settle);
    c.set("settle_time", settle);
    let growth = if at_settle > 0.0 { max_all / at_settle - 1.0 } else if max_all == 0.0 { 0.0 } else { f64::INFINITY };
    c.worst_margin = growth - growth_tolerance;
    c.passed = max_all.is_finite() && growth <= growth_tolerance;
    c
}

/// Supremum of `‖z(t) − z(τ)‖_{H¹×H¹} / sqrt(t − τ)` over sampled pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub sup: f64,
    pub argmax: (f64, f64),
    pub pairs: usize,
}

pub fn holder_time_estimate(samples: &[(f64, SpectralField, SpectralField)]) -> Result<HolderEstimate> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            have: samples.len(),
            need: 2,
        });
    }
    let mut best = HolderEstimate {
        sup: 0.0,
        argmax: (samples[0].0, samples[0].0),
        pairs: 0,
    };
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            let (ti, vi, pi) = &samples[i];
            let (tj, vj, pj) = &samples[j];
            let gap = tj - ti;
            if !(gap > 0.0) {
                return Err(Error::Sampling("sample times must increase".into()));
            }
            let dist = (vj.sub(vi)?.h1_sq() + pj.sub(pi)?.h1_sq()).sqrt();
            let h = dist / gap.sqrt();
            best.pairs += 1;
            if h > best.sup {
                best.sup = h;
                best.argmax = (*ti, *tj);
            }
        }
    }
    Ok(best)
}

/// Constants of `D(t) ≤ L₁ e^{L₂ t} D(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzFit {
    pub l1: f64,
    pub l2: f64,
    /// `D(T)/D(0)`.
    pub final_ratio: f64,
    /// Largest `D(t_k) / (L₁ e^{L₂ t_k} D(0))`; at most 1 when feasible.
    pub worst_ratio: f64,
    pub samples: usize,
}

/// Fits `L₁ ≥ 1`, `L₂ ≥ 0` to the gap functional `D` sampled at `times`.
///
/// The pair minimizes the mean of `ln(L₁ e^{L₂ t})` over `[t₀, T]` subject
/// to the bound holding at every sample.
pub fn lipschitz_fit(times: &[f64], gaps: &[f64]) -> Result<LipschitzFit> {
    if times.len() != gaps.len() || times.is_empty() {
        return Err(Error::Sampling("times and gap values must pair up".into()));
    }
    if gaps.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::NonFinite("gap functional"));
    }
    let d0 = gaps[0];
    let t0 = times[0];
    if d0 == 0.0 {
        let worst = if gaps.iter().all(|&g| g == 0.0) { 0.0 } else { f64::INFINITY };
        return Ok(LipschitzFit {
            l1: 1.0,
            l2: 0.0,
            final_ratio: 0.0,
            worst_ratio: worst,
            samples: gaps.len(),
        });
    }
    let t_mid = 0.5 * (times[times.len() - 1] - t0);
    let lines: Vec<Line> = times
        .iter()
        .zip(gaps)
        .filter(|(_, g)| **g > 0.0)
        .map(|(t, g)| Line::new(t_mid - (t - t0), (g / d0).ln()))
        .collect();
    let (l2, _) = minimize_envelope(&lines, 0.0).unwrap_or((0.0, 0.0));
    let shifted: Vec<Line> = lines.iter().map(|l| Line::new(-(t_mid - l.slope), l.intercept)).collect();
    let ln_l1 = envelope(&shifted, l2).max(0.0);
    let l1 = ln_l1.exp();
    let worst_ratio = times
        .iter()
        .zip(gaps)
        .map(|(t, g)| g / (l1 * (l2 * (t - t0)).exp() * d0))
        .fold(0.0, f64::max);
    Ok(LipschitzFit {
        l1,
        l2,
        final_ratio: gaps[gaps.len() - 1] / d0,
        worst_ratio,
        samples: gaps.len(),
    })
}
