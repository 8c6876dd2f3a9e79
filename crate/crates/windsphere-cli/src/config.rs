//! Run configuration: JSON-loadable, flag-overridable, validated.
//!
//! A [`RunConfig`] is the JSON surface; unknown keys are rejected and
//! every numeric option is validated against its documented range before
//! an experiment starts. [`Resolved`] is the merged result of config
//! file, command-line overrides, and per-preset defaults.

use std::f64::consts::{FRAC_PI_3, PI};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use windsphere::{parse_wind, ProfileSpec, Surface, SurfacePoint, VectorFieldSpec};

/// Step sizes outside this range either crawl or lose the integrator's
/// accuracy budget.
pub const STEP_RANGE: (f64, f64) = (1e-5, 0.05);
pub const FAN_RANGE: (usize, usize) = (64, 4096);
pub const GRID_RANGE: (usize, usize) = (8, 20_000);
pub const LENGTH_RANGE: (f64, f64) = (0.0, 50.0);

/// Failure cases with their process exit codes: configuration errors
/// exit 2, certified-precondition failures exit 3, numeric failures
/// (pole crossings, I/O while writing artifacts) exit 4. A run whose
/// checks fail exits 1 without a `Failure`.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Precondition(String),
    Numeric(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Precondition(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Precondition(m) => write!(f, "precondition failed: {m}"),
            Failure::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<windsphere::Error> for Failure {
    fn from(e: windsphere::Error) -> Self {
        use windsphere::Error::*;
        match e {
            PoleGuard { .. } | PoleCrossing { .. } | EmptyTrace => Failure::Numeric(e.to_string()),
            // The inner message already names the violated condition.
            PreconditionFailed(m) => Failure::Precondition(m),
            NonConvex { .. } => Failure::Precondition(e.to_string()),
            InvalidParameter(_) | Domain(_) | UnsupportedFamily(_) => {
                Failure::Config(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("i/o: {e}"))
    }
}

/// The seven experiments the CLI can dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Check,
    Curvature,
    Geodesic,
    Fan,
    CutLocus,
    HalfPeriod,
    VerifyLemmas,
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Experiment::Check => "check",
            Experiment::Curvature => "curvature",
            Experiment::Geodesic => "geodesic",
            Experiment::Fan => "fan",
            Experiment::CutLocus => "cutlocus",
            Experiment::HalfPeriod => "halfperiod",
            Experiment::VerifyLemmas => "verify-lemmas",
        }
    }
}

/// Plot projection for sphere-chart artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Unrolled `(theta, r)` rectangle.
    Chart,
    /// North-pole azimuthal equidistant disk.
    Azimuthal,
}

/// JSON run configuration. Every field is optional; unset fields fall
/// back to the preset (when one is named) and then to built-in defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Must match the subcommand when both are given.
    pub experiment: Option<String>,
    /// Named bundle of profile + winds + source; `three-step` is the
    /// rotation-rotation-radial navigation chain on TwistedSine(1/4).
    pub preset: Option<String>,
    /// `round`, `twisted-sine`, or `arcsin-ratio`.
    pub profile: Option<String>,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    /// Ordered wind stages (at most three), catalog ids such as
    /// `rotation:0.3`, `radial:ratio`, `sum:[radial:ratio,rotation:-0.3]`.
    pub winds: Option<Vec<String>>,
    pub q_r: Option<f64>,
    pub q_theta: Option<f64>,
    /// Launch angle to the parallel for single-geodesic runs.
    pub phi: Option<f64>,
    pub length: Option<f64>,
    pub length_cap: Option<f64>,
    pub step: Option<f64>,
    pub fan_n: Option<usize>,
    pub n_grid: Option<usize>,
    /// Overrides the experiment's headline check tolerance.
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub svg: Option<bool>,
    /// `chart` or `azimuthal`.
    pub projection: Option<String>,
}

/// Command-line overrides that win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub step: Option<f64>,
    pub fan_n: Option<usize>,
    pub svg: Option<bool>,
    pub preset: Option<String>,
}

/// Fully merged and validated run parameters.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: Experiment,
    pub surface: Surface,
    pub profile_label: String,
    /// Parsed wind stages, innermost first.
    pub winds: Vec<VectorFieldSpec>,
    pub q: SurfacePoint,
    pub phi: f64,
    pub length: f64,
    pub length_cap: f64,
    pub step: f64,
    pub fan_n: usize,
    pub n_grid: Option<usize>,
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub svg: bool,
    pub projection: Projection,
    /// Echo of the merged config, embedded in the report.
    pub echo: RunConfig,
}

fn range_check(name: &str, value: f64, lo: f64, hi: f64) -> Result<(), Failure> {
    if !(value > lo && value <= hi) {
        return Err(Failure::Config(format!(
            "{name} = {value} outside ({lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Applies the named preset to unset fields.
fn apply_preset(cfg: &mut RunConfig) -> Result<(), Failure> {
    let Some(name) = cfg.preset.clone() else {
        return Ok(());
    };
    match name.as_str() {
        "three-step" => {
            cfg.profile.get_or_insert_with(|| "twisted-sine".into());
            cfg.alpha.get_or_insert(0.25);
            cfg.winds.get_or_insert_with(|| {
                vec![
                    "rotation:0.15".into(),
                    "rotation:0.15".into(),
                    "sum:[radial:ratio,rotation:-0.3]".into(),
                ]
            });
            cfg.q_r.get_or_insert(FRAC_PI_3);
            cfg.q_theta.get_or_insert(0.0);
            Ok(())
        }
        other => Err(Failure::Config(format!(
            "unknown preset `{other}`; available: three-step"
        ))),
    }
}

/// Merges config file and overrides, validates every field, and builds
/// the surface and wind stages.
pub fn resolve(
    experiment: Experiment,
    mut cfg: RunConfig,
    flags: &Overrides,
) -> Result<Resolved, Failure> {
    if let Some(id) = &cfg.experiment {
        if id != experiment.id() {
            return Err(Failure::Config(format!(
                "config names experiment `{id}` but the subcommand is `{}`",
                experiment.id()
            )));
        }
    }
    cfg.experiment = Some(experiment.id().into());
    if let Some(p) = &flags.preset {
        cfg.preset = Some(p.clone());
    }
    apply_preset(&mut cfg)?;
    if let Some(seed) = flags.seed {
        cfg.seed = Some(seed);
    }
    if let Some(step) = flags.step {
        cfg.step = Some(step);
    }
    if let Some(fan_n) = flags.fan_n {
        cfg.fan_n = Some(fan_n);
    }
    if let Some(out) = &flags.out {
        cfg.out = Some(out.clone());
    }
    if let Some(svg) = flags.svg {
        cfg.svg = Some(svg);
    }

    let profile_id = cfg.profile.clone().unwrap_or_else(|| "round".into());
    let (spec, profile_label) = match profile_id.as_str() {
        "round" => {
            if cfg.alpha.is_some() || cfg.lambda.is_some() {
                return Err(Failure::Config(
                    "profile `round` takes neither alpha nor lambda".into(),
                ));
            }
            (ProfileSpec::round(), "round".to_string())
        }
        "twisted-sine" => {
            if cfg.lambda.is_some() {
                return Err(Failure::Config("profile `twisted-sine` takes alpha, not lambda".into()));
            }
            let alpha = cfg.alpha.unwrap_or(0.25);
            (
                ProfileSpec::twisted_sine(alpha).map_err(Failure::from)?,
                format!("twisted-sine({alpha})"),
            )
        }
        "arcsin-ratio" => {
            if cfg.alpha.is_some() {
                return Err(Failure::Config("profile `arcsin-ratio` takes lambda, not alpha".into()));
            }
            let lambda = cfg.lambda.unwrap_or(1.0);
            (
                ProfileSpec::arcsin_ratio(lambda).map_err(Failure::from)?,
                format!("arcsin-ratio({lambda})"),
            )
        }
        other => {
            return Err(Failure::Config(format!(
                "unknown profile `{other}`; available: round, twisted-sine, arcsin-ratio"
            )));
        }
    };
    let surface = Surface::new(spec).map_err(Failure::from)?;

    let wind_ids = cfg.winds.clone().unwrap_or_default();
    if wind_ids.len() > 3 {
        return Err(Failure::Config(format!(
            "at most three wind stages are supported, got {}",
            wind_ids.len()
        )));
    }
    let mut winds = Vec::with_capacity(wind_ids.len());
    for id in &wind_ids {
        winds.push(parse_wind(id).map_err(Failure::from)?);
    }

    let q_r = cfg.q_r.unwrap_or(FRAC_PI_3);
    if !(q_r > 0.0 && q_r < PI) {
        return Err(Failure::Config(format!("q_r = {q_r} outside (0, pi)")));
    }
    let q = SurfacePoint::new(q_r, cfg.q_theta.unwrap_or(0.0));

    let phi = cfg.phi.unwrap_or(0.6);
    if !(-PI..=PI).contains(&phi) {
        return Err(Failure::Config(format!("phi = {phi} outside [-pi, pi]")));
    }
    let length = cfg.length.unwrap_or(PI);
    range_check("length", length, LENGTH_RANGE.0, LENGTH_RANGE.1)?;
    let length_cap = cfg.length_cap.unwrap_or(9.0);
    range_check("length_cap", length_cap, LENGTH_RANGE.0, LENGTH_RANGE.1)?;
    let step = cfg.step.unwrap_or(1e-3);
    range_check("step", step, STEP_RANGE.0, STEP_RANGE.1)?;
    let fan_n = cfg.fan_n.unwrap_or(128);
    if !(FAN_RANGE.0..=FAN_RANGE.1).contains(&fan_n) {
        return Err(Failure::Config(format!(
            "fan_n = {fan_n} outside [{}, {}]",
            FAN_RANGE.0, FAN_RANGE.1
        )));
    }
    if let Some(n) = cfg.n_grid {
        if !(GRID_RANGE.0..=GRID_RANGE.1).contains(&n) {
            return Err(Failure::Config(format!(
                "n_grid = {n} outside [{}, {}]",
                GRID_RANGE.0, GRID_RANGE.1
            )));
        }
    }
    if let Some(tol) = cfg.tolerance {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Failure::Config(format!("tolerance = {tol} outside (0, 1)")));
        }
    }
    let projection = match cfg.projection.as_deref() {
        None | Some("chart") => Projection::Chart,
        Some("azimuthal") => Projection::Azimuthal,
        Some(other) => {
            return Err(Failure::Config(format!(
                "unknown projection `{other}`; available: chart, azimuthal"
            )));
        }
    };

    let out = cfg.out.take().unwrap_or_else(|| PathBuf::from("."));
    Ok(Resolved {
        experiment,
        surface,
        profile_label,
        winds,
        q,
        phi,
        length,
        length_cap,
        step,
        fan_n,
        n_grid: cfg.n_grid,
        tolerance: cfg.tolerance,
        seed: cfg.seed.unwrap_or(0),
        out,
        svg: cfg.svg.unwrap_or(true),
        projection,
        // The output directory is run-local plumbing; it is dropped from
        // the echo so reports hash identically wherever they land.
        echo: cfg,
    })
}
