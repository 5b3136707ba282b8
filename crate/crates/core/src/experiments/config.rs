//! Experiment configuration files.
//!
//! The format is `key = value` lines grouped under `[section]` headers, with
//! `#` or `;` comments. Complex numbers are written `re+imi` (`0.3+1.0i`,
//! `-2i`, `1.5`), lengths accept `pi` multiples (`pi`, `2pi`, `0.5*pi`), and
//! mode lists are comma separated `index:amplitude` pairs with 1-based
//! wavenumbers (`1:0.5+0i, 3:-0.2i`, or `2x3:1+0i` on a rectangle).
//!
//! Unknown sections and keys are rejected so that typos surface as errors.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ini::{Ini, ParseOption};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::EnergyWeights;
use crate::dynamics::{DEFAULT_DT, DEFAULT_GUARD};
use crate::error::{Error, Result};
use crate::model::{BoxDomain, PhysParams};

/// The experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SingleRun,
    TwoTrajectory,
    Decomposition,
    Convergence,
    AbsorbingEnsemble,
    CertificateSuite,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::SingleRun,
        Scenario::TwoTrajectory,
        Scenario::Decomposition,
        Scenario::Convergence,
        Scenario::AbsorbingEnsemble,
        Scenario::CertificateSuite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::SingleRun => "single-run",
            Scenario::TwoTrajectory => "two-trajectory",
            Scenario::Decomposition => "decomposition",
            Scenario::Convergence => "convergence",
            Scenario::AbsorbingEnsemble => "absorbing-ensemble",
            Scenario::CertificateSuite => "certificate-suite",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scenario::ALL.iter().map(|k| k.as_str()).collect();
                format!("unknown scenario `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// One entry of a mode list: 1-based wavenumbers and a coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitude {
    pub index: [usize; 2],
    pub value: Complex64,
}

/// Initial data for the primary trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialConfig {
    Zero,
    Modes {
        v: Vec<ModeAmplitude>,
        phi: Vec<ModeAmplitude>,
    },
    /// Random phases, moduli `∝ λ^{−decay}`, joint `H¹` norm `radius`.
    Seeded { radius: f64, decay: f64 },
    /// `amplitude · Π_k exp(−(x_k − center_k)²/(2 width²))` in both fields.
    Bump { center: Vec<f64>, width: f64, amplitude: f64 },
}

/// Time-independent forcing given by mode lists (empty lists mean zero).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ForcingConfig {
    pub f: Vec<ModeAmplitude>,
    pub h: Vec<ModeAmplitude>,
}

impl ForcingConfig {
    pub fn is_zero(&self) -> bool {
        self.f.iter().chain(&self.h).all(|m| m.value == Complex64::new(0.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Horizon `T`.
    pub horizon: f64,
    pub stride: usize,
    pub guard: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            horizon: 20.0,
            stride: 10,
            guard: DEFAULT_GUARD,
        }
    }
}

/// How contraction pairs are formed from the burned-in ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    /// `(z, z + (0, δφ))`.
    PurePhi,
    /// Two independent ensemble members.
    Independent,
}

impl FromStr for PairKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pure-phi" => Ok(PairKind::PurePhi),
            "independent" => Ok(PairKind::Independent),
            _ => Err(format!("unknown pair kind `{s}` (expected pure-phi or independent)")),
        }
    }
}

/// Scenario knobs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    /// Initial gaps of the two-trajectory runs.
    pub gaps: Vec<f64>,
    /// Gap and horizon of the Lipschitz check inside the certificate suite.
    pub lipschitz_gap: f64,
    pub lipschitz_time: f64,
    /// Allowed spread of `D(T)/D(0)` across gap sizes.
    pub gap_spread: f64,
    pub residual_tolerance: f64,
    pub absorbing_tolerance: f64,
    pub window_growth: f64,
    pub exact_tolerance: f64,
    pub stepped_tolerance: f64,
    /// Relative disagreement allowed between the two `φᶜ` routes.
    pub route_tolerance: f64,
    pub compact_burn_in: f64,
    pub levels: Vec<usize>,
    pub refine_time: f64,
    pub refine_contraction: f64,
    pub order_dt: f64,
    pub order_levels: usize,
    pub order_time: f64,
    pub order_min: f64,
    pub order_max: f64,
    pub members: usize,
    pub radii: Vec<f64>,
    pub burn_in: f64,
    pub pairs: usize,
    pub pair_kind: PairKind,
    pub pair_gap: f64,
    pub lambda_target: f64,
    pub contraction_horizon: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            gaps: vec![1e-3, 1e-4, 1e-5],
            lipschitz_gap: 1e-4,
            lipschitz_time: 2.0,
            gap_spread: 0.05,
            residual_tolerance: 1e-9,
            absorbing_tolerance: 1e-8,
            window_growth: 0.2,
            exact_tolerance: 1e-10,
            stepped_tolerance: 1e-6,
            route_tolerance: 1e-6,
            compact_burn_in: 0.5,
            levels: vec![8, 16, 32, 64],
            refine_time: 1.0,
            refine_contraction: 0.5,
            order_dt: 1e-2,
            order_levels: 3,
            order_time: 1.0,
            order_min: 1.8,
            order_max: 2.2,
            members: 8,
            radii: vec![1.0, 2.0, 4.0],
            burn_in: 5.0,
            pairs: 8,
            pair_kind: PairKind::Independent,
            pair_gap: 1e-2,
            lambda_target: 0.25,
            contraction_horizon: 10.0,
        }
    }
}

/// A fully parsed experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub params: PhysParams,
    pub domain: BoxDomain,
    pub forcing: ForcingConfig,
    pub initial: InitialConfig,
    pub integrator: IntegratorConfig,
    pub weights: EnergyWeights,
    pub options: ScenarioOptions,
    /// Output directory requested by the file, if any.
    pub output_dir: Option<String>,
}

impl Default for ExperimentConfig {
    /// The benchmark configuration: default parameters on `(0, π)` with 64
    /// modes, a radius-2 seeded initial state, no forcing, `T = 20`.
    fn default() -> Self {
        Self {
            name: "default".into(),
            scenario: Scenario::SingleRun,
            seed: 0,
            params: PhysParams::default(),
            domain: BoxDomain::default_interval(64),
            forcing: ForcingConfig::default(),
            initial: InitialConfig::Seeded {
                radius: 2.0,
                decay: 1.5,
            },
            integrator: IntegratorConfig::default(),
            weights: EnergyWeights::default(),
            options: ScenarioOptions::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("experiment")
            .to_string();
        let mut cfg = Self::parse(&text)?;
        if !cfg.name_given {
            cfg.config.name = stem;
        }
        Ok(cfg.config)
    }

    /// Parses configuration text; the name defaults to `default` unless the
    /// `[output]` section sets one.
    pub fn from_str_config(text: &str) -> Result<Self> {
        Ok(Self::parse(text)?.config)
    }

    fn parse(text: &str) -> Result<Parsed> {
        let opt = ParseOption {
            enabled_quote: false,
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| Error::config("file", e.to_string()))?;
        let mut reader = Reader::new(&ini)?;
        let cfg = reader.read()?;
        reader.finish()?;
        cfg.validate()?;
        Ok(Parsed {
            name_given: reader.name_given,
            config: cfg,
        })
    }

    /// Checks every cross-field invariant.
    pub fn validate(&self) -> Result<()> {
        if let Err(e) = self.params.checked_allow_linear() {
            return Err(Error::config("params", e.to_string()));
        }
        self.domain.validate().map_err(|e| Error::config("domain", e.to_string()))?;
        self.weights.validate().map_err(|e| Error::config("weights", e.to_string()))?;
        let it = &self.integrator;
        if !(it.dt > 0.0 && it.dt.is_finite()) {
            return Err(Error::config("integrator.dt", "must be positive"));
        }
        if !(it.horizon >= 0.0 && it.horizon.is_finite()) {
            return Err(Error::config("integrator.T", "must be nonnegative"));
        }
        if it.stride == 0 {
            return Err(Error::config("integrator.stride", "must be at least 1"));
        }
        if !(it.guard > 0.0) {
            return Err(Error::config("integrator.guard", "must be positive"));
        }
        match &self.initial {
            InitialConfig::Seeded { radius, decay } => {
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(Error::config("initial.radius", "must be nonnegative"));
                }
                if !decay.is_finite() {
                    return Err(Error::config("initial.decay", "must be finite"));
                }
            }
            InitialConfig::Bump { center, width, .. } => {
                if center.len() != self.domain.dim() {
                    return Err(Error::config("initial.center", "needs one coordinate per axis"));
                }
                if !(*width > 0.0) {
                    return Err(Error::config("initial.width", "must be positive"));
                }
            }
            InitialConfig::Modes { v, phi } => {
                self.check_modes("initial.v", v)?;
                self.check_modes("initial.phi", phi)?;
            }
            InitialConfig::Zero => {}
        }
        self.check_modes("forcing.f", &self.forcing.f)?;
        self.check_modes("forcing.h", &self.forcing.h)?;
        let o = &self.options;
        if o.levels.len() < 2 || o.levels.windows(2).any(|w| w[1] <= w[0]) || o.levels[0] == 0 {
            return Err(Error::config("scenario.levels", "need at least two increasing mode counts"));
        }
        if o.order_levels < 2 {
            return Err(Error::config("scenario.order_levels", "need at least two step sizes"));
        }
        if !(o.lambda_target > 0.0 && o.lambda_target < 0.5) {
            return Err(Error::config("scenario.lambda_target", "must lie in (0, 1/2)"));
        }
        if o.members == 0 || o.radii.is_empty() || o.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::config("scenario.radii", "need a positive member count and positive radii"));
        }
        if o.gaps.is_empty() || o.gaps.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::config("scenario.gaps", "need positive gaps"));
        }
        if o.pairs == 0 {
            return Err(Error::config("scenario.pairs", "need at least one pair"));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config("output.name", "must be a plain file name"));
        }
        Ok(())
    }

    fn check_modes(&self, field: &str, list: &[ModeAmplitude]) -> Result<()> {
        let dim = self.domain.dim();
        for m in list {
            for k in 0..2 {
                let limit = if k < dim { self.domain.modes[k] } else { 1 };
                if m.index[k] == 0 || m.index[k] > limit {
                    return Err(Error::config(
                        field,
                        format!("mode {}x{} outside the retained range", m.index[0], m.index[1]),
                    ));
                }
            }
            if !(m.value.re.is_finite() && m.value.im.is_finite()) {
                return Err(Error::config(field, "non-finite amplitude"));
            }
        }
        Ok(())
    }
}

struct Parsed {
    name_given: bool,
    config: ExperimentConfig,
}

const SECTIONS: [(&str, &[&str]); 8] = [
    ("params", &["U", "a", "b", "c", "m", "g", "nu", "mu", "gamma", "d"]),
    ("domain", &["length", "modes", "grid", "length_y", "modes_y", "grid_y"]),
    ("forcing", &["f", "h"]),
    ("initial", &["kind", "radius", "decay", "v", "phi", "center", "width", "amplitude"]),
    ("integrator", &["dt", "T", "stride", "guard"]),
    ("weights", &["kappa", "kappa1", "kappa2", "kappa3", "kappa4", "w_t", "w_E3"]),
    (
        "scenario",
        &[
            "name",
            "seed",
            "gaps",
            "lipschitz_gap",
            "lipschitz_time",
            "gap_spread",
            "residual_tolerance",
            "absorbing_tolerance",
            "window_growth",
            "exact_tolerance",
            "stepped_tolerance",
            "route_tolerance",
            "compact_burn_in",
            "levels",
            "refine_time",
            "refine_contraction",
            "order_dt",
            "order_levels",
            "order_time",
            "order_min",
            "order_max",
            "members",
            "radii",
            "burn_in",
            "pairs",
            "pair_kind",
            "pair_gap",
            "lambda_target",
            "contraction_horizon",
        ],
    ),
    ("output", &["name", "dir"]),
];

struct Reader<'a> {
    ini: &'a Ini,
    used: BTreeSet<(String, String)>,
    name_given: bool,
}

impl<'a> Reader<'a> {
    fn new(ini: &'a Ini) -> Result<Self> {
        for (section, props) in ini.iter() {
            match section {
                None => {
                    if let Some((k, _)) = props.iter().next() {
                        return Err(Error::config(k, "keys must appear inside a [section]"));
                    }
                }
                Some(name) => {
                    let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                        return Err(Error::config(name, "unknown section"));
                    };
                    for (k, _) in props.iter() {
                        if !keys.contains(&k) {
                            return Err(Error::config(format!("{name}.{k}"), "unknown key"));
                        }
                    }
                    if props.iter().map(|(k, _)| k).collect::<BTreeSet<_>>().len() != props.len() {
                        return Err(Error::config(name, "duplicate key"));
                    }
                }
            }
        }
        Ok(Self {
            ini,
            used: BTreeSet::new(),
            name_given: false,
        })
    }

    fn raw(&mut self, section: &str, key: &str) -> Option<&'a str> {
        let v = self.ini.get_from(Some(section), key)?;
        self.used.insert((section.to_string(), key.to_string()));
        Some(v.trim())
    }

    fn get<T>(&mut self, section: &str, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(s) => parse(s).map(Some).map_err(|m| Error::config(format!("{section}.{key}"), m)),
        }
    }

    fn real(&mut self, section: &str, key: &str, default: f64) -> Result<f64> {
        Ok(self.get(section, key, parse_real)?.unwrap_or(default))
    }

    fn count(&mut self, section: &str, key: &str, default: usize) -> Result<usize> {
        Ok(self
            .get(section, key, |s| s.parse::<usize>().map_err(|e| format!("`{s}`: {e}")))?
            .unwrap_or(default))
    }

    fn reals(&mut self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .get(section, key, |s| split_list(s).map(parse_real).collect())?
            .unwrap_or_else(|| default.to_vec()))
    }

    fn modes(&mut self, section: &str, key: &str) -> Result<Vec<ModeAmplitude>> {
        Ok(self.get(section, key, parse_mode_list)?.unwrap_or_default())
    }

    fn read(&mut self) -> Result<ExperimentConfig> {
        let base = ExperimentConfig::default();
        let dp = base.params;
        let d = self
            .get("params", "d", parse_complex)?
            .unwrap_or(Complex64::new(dp.d_r, dp.d_i));
        let params = PhysParams {
            u: self.real("params", "U", dp.u)?,
            a: self.real("params", "a", dp.a)?,
            b: self.real("params", "b", dp.b)?,
            c: self.real("params", "c", dp.c)?,
            m: self.real("params", "m", dp.m)?,
            g: self.real("params", "g", dp.g)?,
            nu: self.real("params", "nu", dp.nu)?,
            mu: self.real("params", "mu", dp.mu)?,
            gamma: self.real("params", "gamma", dp.gamma)?,
            d_r: d.re,
            d_i: d.im,
        };

        let modes = self.count("domain", "modes", 64)?;
        let mut lengths = vec![self.real("domain", "length", PI)?];
        let mut mode_counts = vec![modes];
        let mut grid = vec![self.count("domain", "grid", 4 * modes)?];
        let modes_y = self.get("domain", "modes_y", |s| s.parse::<usize>().map_err(|e| format!("`{s}`: {e}")))?;
        if let Some(my) = modes_y {
            lengths.push(self.real("domain", "length_y", PI)?);
            mode_counts.push(my);
            grid.push(self.count("domain", "grid_y", 4 * my)?);
        } else if self.raw("domain", "length_y").is_some() || self.raw("domain", "grid_y").is_some() {
            return Err(Error::config("domain.modes_y", "required when a second axis is configured"));
        }
        let domain = BoxDomain {
            lengths,
            modes: mode_counts,
            grid,
        };

        let forcing = ForcingConfig {
            f: self.modes("forcing", "f")?,
            h: self.modes("forcing", "h")?,
        };

        let kind = self.raw("initial", "kind").unwrap_or("seeded");
        let initial = match kind {
            "zero" => InitialConfig::Zero,
            "modes" => InitialConfig::Modes {
                v: self.modes("initial", "v")?,
                phi: self.modes("initial", "phi")?,
            },
            "seeded" => InitialConfig::Seeded {
                radius: self.real("initial", "radius", 2.0)?,
                decay: self.real("initial", "decay", 1.5)?,
            },
            "bump" => {
                let center_default: Vec<f64> = domain.lengths.iter().map(|l| l / 2.0).collect();
                InitialConfig::Bump {
                    center: self.reals("initial", "center", &center_default)?,
                    width: self.real("initial", "width", PI / 16.0)?,
                    amplitude: self.real("initial", "amplitude", 1.0)?,
                }
            }
            other => {
                return Err(Error::config(
                    "initial.kind",
                    format!("unknown kind `{other}` (expected zero, modes, seeded or bump)"),
                ))
            }
        };

        let di = base.integrator;
        let integrator = IntegratorConfig {
            dt: self.real("integrator", "dt", di.dt)?,
            horizon: self.real("integrator", "T", di.horizon)?,
            stride: self.count("integrator", "stride", di.stride)?,
            guard: self.real("integrator", "guard", di.guard)?,
        };

        let dw = base.weights;
        let weights = EnergyWeights {
            kappa: self.real("weights", "kappa", dw.kappa)?,
            kappa1: self.real("weights", "kappa1", dw.kappa1)?,
            kappa2: self.real("weights", "kappa2", dw.kappa2)?,
            kappa3: self.real("weights", "kappa3", dw.kappa3)?,
            kappa4: self.real("weights", "kappa4", dw.kappa4)?,
            w_t: self.real("weights", "w_t", dw.w_t)?,
            w_e3: self.real("weights", "w_E3", dw.w_e3)?,
        };

        let scenario = self
            .get("scenario", "name", |s| s.parse::<Scenario>())?
            .unwrap_or(base.scenario);
        let seed = self
            .get("scenario", "seed", |s| s.parse::<u64>().map_err(|e| format!("`{s}`: {e}")))?
            .unwrap_or(base.seed);
        let o = ScenarioOptions::default();
        let options = ScenarioOptions {
            gaps: self.reals("scenario", "gaps", &o.gaps)?,
            lipschitz_gap: self.real("scenario", "lipschitz_gap", o.lipschitz_gap)?,
            lipschitz_time: self.real("scenario", "lipschitz_time", o.lipschitz_time)?,
            gap_spread: self.real("scenario", "gap_spread", o.gap_spread)?,
            residual_tolerance: self.real("scenario", "residual_tolerance", o.residual_tolerance)?,
            absorbing_tolerance: self.real("scenario", "absorbing_tolerance", o.absorbing_tolerance)?,
            window_growth: self.real("scenario", "window_growth", o.window_growth)?,
            exact_tolerance: self.real("scenario", "exact_tolerance", o.exact_tolerance)?,
            stepped_tolerance: self.real("scenario", "stepped_tolerance", o.stepped_tolerance)?,
            route_tolerance: self.real("scenario", "route_tolerance", o.route_tolerance)?,
            compact_burn_in: self.real("scenario", "compact_burn_in", o.compact_burn_in)?,
            levels: self
                .get("scenario", "levels", |s| {
                    split_list(s)
                        .map(|x| x.parse::<usize>().map_err(|e| format!("`{x}`: {e}")))
                        .collect()
                })?
                .unwrap_or(o.levels),
            refine_time: self.real("scenario", "refine_time", o.refine_time)?,
            refine_contraction: self.real("scenario", "refine_contraction", o.refine_contraction)?,
            order_dt: self.real("scenario", "order_dt", o.order_dt)?,
            order_levels: self.count("scenario", "order_levels", o.order_levels)?,
            order_time: self.real("scenario", "order_time", o.order_time)?,
            order_min: self.real("scenario", "order_min", o.order_min)?,
            order_max: self.real("scenario", "order_max", o.order_max)?,
            members: self.count("scenario", "members", o.members)?,
            radii: self.reals("scenario", "radii", &o.radii)?,
            burn_in: self.real("scenario", "burn_in", o.burn_in)?,
            pairs: self.count("scenario", "pairs", o.pairs)?,
            pair_kind: self
                .get("scenario", "pair_kind", |s| s.parse::<PairKind>())?
                .unwrap_or(o.pair_kind),
            pair_gap: self.real("scenario", "pair_gap", o.pair_gap)?,
            lambda_target: self.real("scenario", "lambda_target", o.lambda_target)?,
            contraction_horizon: self.real("scenario", "contraction_horizon", o.contraction_horizon)?,
        };

        let name = match self.raw("output", "name") {
            Some(n) => {
                self.name_given = true;
                n.to_string()
            }
            None => base.name,
        };
        let output_dir = self.raw("output", "dir").map(str::to_string);

        Ok(ExperimentConfig {
            name,
            scenario,
            seed,
            params,
            domain,
            forcing,
            initial,
            integrator,
            weights,
            options,
            output_dir,
        })
    }

    fn finish(&self) -> Result<()> {
        for (section, props) in self.ini.iter() {
            let Some(section) = section else { continue };
            for (k, _) in props.iter() {
                if !self.used.contains(&(section.to_string(), k.to_string())) {
                    return Err(Error::config(format!("{section}.{k}"), "key not used by this configuration"));
                }
            }
        }
        Ok(())
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// Parses a real number, accepting `pi`, `2pi`, `2*pi` and `0.5 * pi`.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    let value = if let Some(prefix) = t.strip_suffix("pi") {
        let prefix = prefix.trim().trim_end_matches('*').trim();
        let factor = match prefix {
            "" | "+" => 1.0,
            "-" => -1.0,
            p => p.parse::<f64>().map_err(|e| format!("`{s}`: {e}"))?,
        };
        factor * PI
    } else {
        t.parse::<f64>().map_err(|e| format!("`{s}`: {e}"))?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Parses `re+imi`, `re-imi`, `imi` or `re`.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("`{s}` is not a complex number of the form re+imi");
    let Some(body) = t.strip_suffix('i') else {
        return parse_real(&t).map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not the leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    let im = im.parse::<f64>().map_err(|_| bad())?;
    if re.is_finite() && im.is_finite() {
        Ok(Complex64::new(re, im))
    } else {
        Err(bad())
    }
}

/// Parses `1:0.5+0i, 3:-0.2i` or `2x3:1+0i`.
pub fn parse_mode_list(s: &str) -> std::result::Result<Vec<ModeAmplitude>, String> {
    let mut out = Vec::new();
    for item in split_list(s) {
        let (idx, val) = item
            .split_once(':')
            .ok_or_else(|| format!("`{item}`: expected index:amplitude"))?;
        let parse_idx = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("`{item}`: {e}"));
        let index = match idx.split_once('x') {
            Some((a, b)) => [parse_idx(a)?, parse_idx(b)?],
            None => [parse_idx(idx)?, 1],
        };
        if out.iter().any(|m: &ModeAmplitude| m.index == index) {
            return Err(format!("mode {}x{} listed twice", index[0], index[1]));
        }
        out.push(ModeAmplitude {
            index,
            value: parse_complex(val)?,
        });
    }
    Ok(out)
}
