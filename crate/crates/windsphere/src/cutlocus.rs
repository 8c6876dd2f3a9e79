//! Half-period function, cut loci, and conjugate loci.
//!
//! On a two-sphere of revolution the reflection through the meridian of
//! the source point is an isometry fixing the source, so the geodesics at
//! angles `Phi` and `-Phi` to the parallel have equal length to their
//! first meeting: that meeting is a Maxwell point, and under conditions
//! (c1)-(c3) these meetings sweep a subarc of the antipodal parallel
//! `r = pi - r0`. The fan here shoots such pairs, bisects each meeting,
//! caps each direction by its first conjugate distance, and aggregates.
//!
//! The half-period function
//! `phi(nu) = 2 * integral_{m^{-1}(nu)}^{pi/2} nu / (m sqrt(m^2 - nu^2)) dr`
//! is the independent quadrature oracle: the meeting of the pair with
//! Clairaut constant `nu` sits at exactly `theta = phi(nu)` past the
//! source meridian, at `r = pi - r0`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::fields::{
    closedness_defect, flow_advance, killing_defect, navigation_one_form, poisson_defect,
    FlowMap, VectorFieldSpec,
};
use crate::geodesics::{
    clairaut_constant, integrate_h_geodesic, jacobi_along, GeodesicState, GeodesicTrace,
};
use crate::metrics::{riemann_eval, Covector, NavigationData};
use crate::surface::{check_profile_conditions, Surface, SurfacePoint};

/// Default absolute tolerance of the half-period quadrature.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-8;

/// Fan directions keep `cos(Phi)` inside this range: the lower clamp keeps
/// near-meridian geodesics away from pole flybys that degrade fixed-step
/// integration, the upper clamp keeps the pair meeting transversal.
pub const FAN_COS_MIN: f64 = 0.05;
pub const FAN_COS_MAX: f64 = 0.995;

/// Certification thresholds for the three-stage navigation chain: the
/// base field must be Killing to analytic accuracy, the stage field is
/// checked through finite-differenced Poisson brackets, the final
/// translation's total one-form must be closed to analytic accuracy.
pub const CHAIN_BASE_KILLING_TOL: f64 = 1e-10;
pub const CHAIN_STAGE_KILLING_TOL: f64 = 1e-5;
pub const CHAIN_CLOSEDNESS_TOL: f64 = 1e-10;

/// Half-period values over a grid of Clairaut constants.
#[derive(Debug, Clone)]
pub struct HalfPeriodTable {
    /// Strictly increasing grid in `(0, m(pi/2))`.
    pub nu_grid: Vec<f64>,
    pub phi_values: Vec<f64>,
    /// Quadrature tolerance used for each entry.
    pub tol: f64,
    /// True when `phi_values` is non-increasing within 1e-9 slack.
    pub monotone: bool,
}

/// Adaptive Simpson quadrature with Richardson correction.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let flm = f(0.5 * (a + m));
        let frm = f(0.5 * (m + b));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Inverts `m` on `[lo, hi]` (where it is increasing) by bisection.
fn invert_m_on(surface: &Surface, target: f64, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    if target <= surface.m(lo) {
        return lo;
    }
    if target >= surface.m(hi) {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if surface.m(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// The half-period `phi(nu)`: the theta-advance of the geodesic with
/// Clairaut constant `nu` between consecutive crossings of the equator-
/// symmetric parallels.
///
/// The integrand has an inverse-square-root singularity at the turning
/// radius `m^{-1}(nu)`; the integral is split at the midpoint toward the
/// equator and the singular piece is regularized by the substitution
/// `w^2 = m^2 - nu^2`, under which it becomes `nu / (m^2 m'(r(w))) dw`
/// with a finite value `1/(nu m'(r_nu))` at `w = 0`.
pub fn half_period(surface: &Surface, nu: f64, tol: f64) -> Result<f64> {
    let m_eq = surface.equator_m();
    if !(nu > 0.0 && nu < m_eq) {
        return Err(Error::Domain(format!(
            "nu must lie in (0, m(pi/2)) = (0, {m_eq}), got {nu}"
        )));
    }
    let tol = if tol > 0.0 { tol } else { DEFAULT_QUADRATURE_TOL };
    let r_nu = surface.m_inverse(nu)?;
    let r_split = 0.5 * (r_nu + FRAC_PI_2);

    let right = adaptive_simpson(
        &|r| {
            let m = surface.m(r);
            nu / (m * (m * m - nu * nu).max(0.0).sqrt())
        },
        r_split,
        FRAC_PI_2,
        0.25 * tol,
    );

    let w_split = (surface.m(r_split).powi(2) - nu * nu).max(0.0).sqrt();
    let left = adaptive_simpson(
        &|w| {
            let target = (nu * nu + w * w).sqrt();
            let r = invert_m_on(surface, target, r_nu, r_split);
            let m = surface.m(r);
            nu / (m * m * surface.dm(r))
        },
        0.0,
        w_split,
        0.25 * tol,
    );

    Ok(2.0 * (left + right))
}

/// Tabulates `phi` over a uniform grid in `[0.05, 0.95] * m(pi/2)` and
/// reports whether the table is non-increasing.
pub fn scan_half_period(surface: &Surface, n_grid: usize) -> Result<HalfPeriodTable> {
    if n_grid < 8 {
        return Err(Error::InvalidParameter(format!(
            "half-period scan needs n_grid >= 8, got {n_grid}"
        )));
    }
    let m_eq = surface.equator_m();
    let tol = DEFAULT_QUADRATURE_TOL;
    let mut nu_grid = Vec::with_capacity(n_grid);
    let mut phi_values = Vec::with_capacity(n_grid);
    for i in 0..n_grid {
        let frac = 0.05 + 0.9 * (i as f64) / ((n_grid - 1) as f64);
        let nu = frac * m_eq;
        nu_grid.push(nu);
        phi_values.push(half_period(surface, nu, tol)?);
    }
    let monotone = phi_values.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    Ok(HalfPeriodTable {
        nu_grid,
        phi_values,
        tol,
        monotone,
    })
}

/// How a direction's minimality ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutKind {
    /// Two distinct minimizers of equal length.
    Maxwell,
    /// First conjugate point reached at or before any meeting.
    Conjugate,
}

impl CutKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CutKind::Maxwell => "maxwell",
            CutKind::Conjugate => "conjugate",
        }
    }
}

/// One endpoint of minimality.
#[derive(Debug, Clone)]
pub struct CutPoint {
    pub source: SurfacePoint,
    pub point: SurfacePoint,
    pub distance: f64,
    pub kind: CutKind,
    /// Clairaut constant of the minimizing geodesic(s).
    pub nu: f64,
}

/// Aggregated cut locus of a source point.
#[derive(Debug, Clone)]
pub struct CutLocusResult {
    pub source: SurfacePoint,
    pub cut_points: Vec<CutPoint>,
    /// Median cut radius; the locus lies on a parallel when the profile
    /// conditions hold.
    pub parallel_r: Option<f64>,
    /// Max deviation of cut radii from `parallel_r`.
    pub max_parallel_deviation: f64,
    /// Endpoints `(lo, hi)` of the locus arc as raw angles with
    /// `lo <= hi`; the arc runs counterclockwise from `lo` to `hi`
    /// through the antipodal meridian. Degenerates to `lo == hi` when the
    /// locus is a single point.
    pub theta_extent: Option<(f64, f64)>,
    /// Distance at which the extent's limiting directions reach the arc
    /// endpoints.
    pub extent_endpoint_distance: Option<f64>,
    pub warnings: Vec<String>,
}

/// Result of one symmetric pair `(gamma_{+Phi}, gamma_{-Phi})`.
struct PairMeet {
    s: f64,
    r: f64,
    theta: f64,
    /// Chart gap between the two geodesics at the refined meeting.
    residual: f64,
    nu: f64,
    /// First conjugate distance along the ascending geodesic, if inside
    /// the integrated range.
    conjugate: Option<f64>,
}

/// Shoots the pair at angles `+-phi` from `q` and bisects their first
/// meeting in `r` past the start.
fn pair_meet(
    surface: &Surface,
    q: SurfacePoint,
    phi: f64,
    length_cap: f64,
    step: f64,
) -> Result<Option<PairMeet>> {
    let up = integrate_h_geodesic(
        surface,
        &GeodesicState::from_angle(surface, q.r, q.theta, phi)?,
        length_cap,
        step,
    )?;
    let down = integrate_h_geodesic(
        surface,
        &GeodesicState::from_angle(surface, q.r, q.theta, -phi)?,
        length_cap,
        step,
    )?;
    let n = up.len().min(down.len());
    if n < 3 {
        return Ok(None);
    }
    let nu = clairaut_constant(surface, &up.samples[0].1);

    // r_+ - r_- starts at 0 with positive slope 2 sin(phi); its first
    // return to zero is the equal-arclength meeting.
    let mut crossing = None;
    for i in 1..(n - 1) {
        let zi = up.samples[i].1.r - down.samples[i].1.r;
        let zn = up.samples[i + 1].1.r - down.samples[i + 1].1.r;
        if zi > 0.0 && zn <= 0.0 {
            crossing = Some(i);
            break;
        }
    }
    let Some(i) = crossing else {
        return Ok(None);
    };
    let (mut lo, mut hi) = (up.samples[i].0, up.samples[i + 1].0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let z = up.state_at(mid).r - down.state_at(mid).r;
        if z > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let s_meet = 0.5 * (lo + hi);
    let a = up.state_at(s_meet);
    let b = down.state_at(s_meet);
    let dr = a.r - b.r;
    let dt = a.theta - b.theta;
    let m = surface.m(0.5 * (a.r + b.r));
    let residual = (dr * dr + m * m * dt * dt).sqrt();
    let conjugate = jacobi_along(surface, &up)?.first_zero;
    Ok(Some(PairMeet {
        s: s_meet,
        r: 0.5 * (a.r + b.r),
        theta: 0.5 * (a.theta + b.theta),
        residual,
        nu,
        conjugate,
    }))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Riemannian cut locus of `q` by the symmetric-pair fan.
///
/// Shoots `fan_n` pairs with `cos(Phi)` spanning
/// `[FAN_COS_MIN, FAN_COS_MAX]`, locates each Maxwell meeting, caps each
/// direction by its first conjugate distance, mirrors across the source
/// meridian, and reports the arc endpoints from the limiting directions
/// where the Maxwell and conjugate distances coincide (bisection over
/// `Phi`).
pub fn riemann_cut_locus(
    surface: &Surface,
    q: SurfacePoint,
    fan_n: usize,
    length_cap: f64,
    step: f64,
) -> Result<CutLocusResult> {
    surface.guard_check(q.r)?;
    if fan_n < 64 {
        return Err(Error::InvalidParameter(format!(
            "cut-locus fan needs fan_n >= 64, got {fan_n}"
        )));
    }
    if !(length_cap > 0.0) || !(step > 0.0) {
        return Err(Error::InvalidParameter(
            "length_cap and step must be positive".into(),
        ));
    }
    let conditions = check_profile_conditions(surface.profile(), 512);
    if !(conditions.c1 && conditions.c2) {
        return Err(Error::PreconditionFailed(format!(
            "profile fails symmetry/monotonicity conditions: c1={} (worst {:.3e} at r={:.4}), c2={} (worst {:.3e} at r={:.4})",
            conditions.c1, conditions.worst_c1.1, conditions.worst_c1.0,
            conditions.c2, conditions.worst_c2.1, conditions.worst_c2.0,
        )));
    }
    let mut warnings = Vec::new();
    if !conditions.c3 {
        warnings.push(
            "profile convexity condition fails; the cut locus need not be a parallel subarc"
                .to_string(),
        );
    }

    let phi_lo = FAN_COS_MAX.acos();
    let phi_hi = FAN_COS_MIN.acos();
    let mut meets: Vec<PairMeet> = Vec::with_capacity(fan_n);
    let mut missed = 0usize;
    for k in 0..fan_n {
        let phi = phi_lo + (phi_hi - phi_lo) * ((k as f64) + 0.5) / (fan_n as f64);
        match pair_meet(surface, q, phi, length_cap, step)? {
            Some(m) => meets.push(m),
            None => missed += 1,
        }
    }
    if meets.is_empty() {
        return Err(Error::Domain(format!(
            "no symmetric pair met within length cap {length_cap}; increase the cap"
        )));
    }
    if missed > 0 {
        warnings.push(format!(
            "{missed} of {fan_n} fan directions produced no meeting within the length cap"
        ));
    }

    let max_residual = meets.iter().map(|m| m.residual).fold(0.0f64, f64::max);
    if max_residual > 1e-6 {
        warnings.push(format!(
            "pair meetings have chart residual up to {max_residual:.3e}"
        ));
    }
    let max_jump = meets
        .windows(2)
        .map(|w| (w[1].theta - w[0].theta).abs())
        .fold(0.0f64, f64::max);
    if max_jump > 5.0 * PI / (fan_n as f64) {
        warnings.push(format!(
            "fan too coarse: adjacent cut candidates jump by {max_jump:.3e} in theta"
        ));
    }

    let mut cut_points = Vec::with_capacity(2 * meets.len());
    for m in &meets {
        let (point, distance, kind) = match m.conjugate {
            // Conjugate points can only preempt the meeting up to solver
            // slack; under the profile conditions they never do.
            Some(c) if c < m.s - 1e-9 => {
                let up = integrate_h_geodesic(
                    surface,
                    &GeodesicState::from_angle(
                        surface,
                        q.r,
                        q.theta,
                        (m.nu / surface.m(q.r)).min(1.0).acos(),
                    )?,
                    c + step,
                    step,
                )?;
                (up.position_at(c), c, CutKind::Conjugate)
            }
            _ => (
                SurfacePoint::new(m.r, m.theta),
                m.s,
                CutKind::Maxwell,
            ),
        };
        let mirrored = SurfacePoint::new(point.r, 2.0 * q.theta - point.theta);
        cut_points.push(CutPoint {
            source: q,
            point,
            distance,
            kind,
            nu: m.nu,
        });
        cut_points.push(CutPoint {
            source: q,
            point: mirrored,
            distance,
            kind,
            nu: m.nu,
        });
    }

    let mut radii: Vec<f64> = cut_points.iter().map(|c| c.point.r).collect();
    let parallel_r = median(&mut radii);
    let max_parallel_deviation = cut_points
        .iter()
        .map(|c| (c.point.r - parallel_r).abs())
        .fold(0.0f64, f64::max);

    // Arc endpoints: the limiting direction where the Maxwell and the
    // conjugate distances coincide, located by bisection over Phi.
    let coincide_gap = 1e-6;
    let separation = |phi: f64| -> Result<Option<f64>> {
        Ok(pair_meet(surface, q, phi, length_cap, step)?.map(|m| match m.conjugate {
            Some(c) => c - m.s,
            // No conjugate point inside the cap: treat as well separated.
            None => f64::INFINITY,
        }))
    };
    let phi_floor = 1e-3;
    let sep_hi = separation(phi_hi)?;
    let (theta_extent, extent_endpoint_distance) = match sep_hi {
        Some(gap_hi) if gap_hi > coincide_gap => {
            let boundary = match separation(phi_floor)? {
                Some(gap_lo) if gap_lo > coincide_gap => phi_floor,
                _ => {
                    let (mut lo, mut hi) = (phi_floor, phi_hi);
                    while hi - lo > 1e-6 {
                        let mid = 0.5 * (lo + hi);
                        match separation(mid)? {
                            Some(gap) if gap > coincide_gap => hi = mid,
                            _ => lo = mid,
                        }
                    }
                    hi
                }
            };
            match pair_meet(surface, q, boundary, length_cap, step)? {
                Some(end) => {
                    let delta = end.theta - q.theta;
                    (
                        Some((q.theta + delta, q.theta + 2.0 * PI - delta)),
                        Some(end.s),
                    )
                }
                None => (None, None),
            }
        }
        _ => {
            // Maxwell and conjugate distances coincide fan-wide: the
            // locus degenerates to a point on the antipodal meridian.
            let mut thetas: Vec<f64> = meets.iter().map(|m| m.theta).collect();
            let t = median(&mut thetas);
            let mut dists: Vec<f64> = meets.iter().map(|m| m.s).collect();
            (Some((t, t)), Some(median(&mut dists)))
        }
    };

    Ok(CutLocusResult {
        source: q,
        cut_points,
        parallel_r: Some(parallel_r),
        max_parallel_deviation,
        theta_extent,
        extent_endpoint_distance,
        warnings,
    })
}

/// First conjugate point per fan direction.
#[derive(Debug, Clone)]
pub struct ConjugatePoint {
    /// Initial angle to the parallel, in `(-pi, pi]`.
    pub angle: f64,
    pub point: SurfacePoint,
    pub distance: f64,
}

/// Conjugate locus of `q` over a full circle of `fan_n` directions;
/// directions with no conjugate point inside the cap (including those
/// truncated at the pole guard) are omitted.
pub fn conjugate_locus(
    surface: &Surface,
    q: SurfacePoint,
    fan_n: usize,
    length_cap: f64,
    step: f64,
) -> Result<Vec<ConjugatePoint>> {
    surface.guard_check(q.r)?;
    if fan_n < 64 {
        return Err(Error::InvalidParameter(format!(
            "conjugate-locus fan needs fan_n >= 64, got {fan_n}"
        )));
    }
    let mut out = Vec::with_capacity(fan_n);
    for k in 0..fan_n {
        let angle = -PI + 2.0 * PI * ((k as f64) + 0.5) / (fan_n as f64);
        let init = GeodesicState::from_angle(surface, q.r, q.theta, angle)?;
        let trace = integrate_h_geodesic(surface, &init, length_cap, step)?;
        if let Some(s_conj) = first_zero_of(surface, &trace)? {
            out.push(ConjugatePoint {
                angle,
                point: trace.position_at(s_conj),
                distance: s_conj,
            });
        }
    }
    Ok(out)
}

fn first_zero_of(surface: &Surface, trace: &GeodesicTrace) -> Result<Option<f64>> {
    Ok(jacobi_along(surface, trace)?.first_zero)
}

/// Three-stage navigation chain: a base-Killing translation `v0`, a
/// stage-Killing translation `v`, and a final translation `w` whose total
/// one-form must be closed.
#[derive(Debug, Clone)]
pub struct NavigationChain {
    pub surface: Surface,
    pub v0: VectorFieldSpec,
    pub v: VectorFieldSpec,
    pub w: VectorFieldSpec,
}

impl NavigationChain {
    pub fn new(
        surface: Surface,
        v0: VectorFieldSpec,
        v: VectorFieldSpec,
        w: VectorFieldSpec,
    ) -> Self {
        NavigationChain { surface, v0, v, w }
    }

    /// Wind of the composite metric: translations add.
    pub fn total_wind(&self) -> VectorFieldSpec {
        VectorFieldSpec::sum(vec![self.v0.clone(), self.v.clone(), self.w.clone()])
    }

    /// The two Killing stages, whose flows deform geodesics and cut
    /// points.
    pub fn killing_wind(&self) -> VectorFieldSpec {
        VectorFieldSpec::sum(vec![self.v0.clone(), self.v.clone()])
    }

    /// Navigation data of the composite metric.
    pub fn navigation(&self) -> NavigationData {
        NavigationData::riemannian(self.surface.clone(), self.total_wind())
    }
}

/// Measured defects of the chain's three preconditions.
#[derive(Debug, Clone, Copy)]
pub struct ChainCertificate {
    /// Max Killing defect of `v0` under the base metric.
    pub base_killing_defect: f64,
    /// Max Poisson-bracket defect of `v` against the first-stage
    /// Hamiltonian.
    pub stage_killing_defect: f64,
    /// Max closedness defect of the total navigation one-form.
    pub closedness_defect: f64,
}

impl ChainCertificate {
    pub fn passes(&self) -> bool {
        self.base_killing_defect < CHAIN_BASE_KILLING_TOL
            && self.stage_killing_defect < CHAIN_STAGE_KILLING_TOL
            && self.closedness_defect < CHAIN_CLOSEDNESS_TOL
    }
}

/// Measures the chain preconditions on a `grid_n x grid_n` sample grid
/// away from the poles, with four probe covectors for the bracket check.
pub fn certify_chain(chain: &NavigationChain, grid_n: usize) -> Result<ChainCertificate> {
    let grid_n = grid_n.max(4);
    let surface = &chain.surface;
    let nav0 = NavigationData::riemannian(surface.clone(), chain.v0.clone());
    let total_form = navigation_one_form(surface, &chain.total_wind());
    let probes = [
        Covector { b_r: 1.0, b_theta: 0.0 },
        Covector { b_r: 0.0, b_theta: 1.0 },
        Covector { b_r: 0.8, b_theta: 0.6 },
        Covector { b_r: -0.7, b_theta: 0.4 },
    ];

    let mut base = 0.0f64;
    let mut stage = 0.0f64;
    let mut closed = 0.0f64;
    for i in 0..grid_n {
        let r = 0.3 + (PI - 0.6) * ((i as f64) + 0.5) / (grid_n as f64);
        for j in 0..grid_n {
            let theta = 2.0 * PI * (j as f64) / (grid_n as f64);
            let p = SurfacePoint::new(r, theta);
            base = base.max(killing_defect(surface, &chain.v0, p)?);
            for cov in probes {
                stage = stage.max(poisson_defect(&nav0, &chain.v, p, cov)?);
            }
            closed = closed.max(closedness_defect(&total_form, p)?);
        }
    }
    Ok(ChainCertificate {
        base_killing_defect: base,
        stage_killing_defect: stage,
        closedness_defect: closed,
    })
}

/// Cut locus of the chain's composite Randers metric.
///
/// Certifies the chain preconditions, computes the base-metric cut locus,
/// and maps each cut point at distance `l` through the Killing flows:
/// first `v0` for time `l`, then `v` for time `l` (for rotations this is
/// `theta += (mu0 + mu1) * l`). Reported distances are the chain's
/// arrival parameter; positions are the composite metric's cut points.
pub fn randers_cut_locus(
    chain: &NavigationChain,
    q: SurfacePoint,
    fan_n: usize,
    length_cap: f64,
    step: f64,
) -> Result<CutLocusResult> {
    let cert = certify_chain(chain, 12)?;
    if cert.base_killing_defect >= CHAIN_BASE_KILLING_TOL {
        return Err(Error::PreconditionFailed(format!(
            "(C0) base field {} is not Killing: defect {:.3e} >= {CHAIN_BASE_KILLING_TOL:.0e}",
            chain.v0.id(),
            cert.base_killing_defect
        )));
    }
    if cert.stage_killing_defect >= CHAIN_STAGE_KILLING_TOL {
        return Err(Error::PreconditionFailed(format!(
            "(C1) stage field {} is not Killing for the first-stage metric: defect {:.3e} >= {CHAIN_STAGE_KILLING_TOL:.0e}",
            chain.v.id(),
            cert.stage_killing_defect
        )));
    }
    if cert.closedness_defect >= CHAIN_CLOSEDNESS_TOL {
        return Err(Error::PreconditionFailed(format!(
            "(C2) total navigation one-form is not closed: defect {:.3e} >= {CHAIN_CLOSEDNESS_TOL:.0e}",
            cert.closedness_defect
        )));
    }
    // The composite wind must stay admissible where the fan travels.
    {
        let total = chain.total_wind();
        let mut worst = 0.0f64;
        for i in 0..48 {
            let r = 0.05 + (PI - 0.1) * (i as f64) / 47.0;
            let p = SurfacePoint::new(r, 0.0);
            let g = riemann_eval(&chain.surface, p)?;
            worst = worst.max(g.norm_sq(total.eval(p.r, p.theta)));
        }
        if worst >= 1.0 {
            return Err(Error::NonConvex {
                what: "||total wind||_h",
                value: worst.sqrt(),
            });
        }
    }

    let base = riemann_cut_locus(&chain.surface, q, fan_n, length_cap, step)?;
    let v0_flow = FlowMap::new(chain.v0.clone());
    let v_flow = FlowMap::new(chain.v.clone());
    let map_point = |p: SurfacePoint, l: f64| -> Result<SurfacePoint> {
        let first = flow_advance(&v0_flow, p, l)?;
        flow_advance(&v_flow, first, l)
    };

    let mut cut_points = Vec::with_capacity(base.cut_points.len());
    for c in &base.cut_points {
        cut_points.push(CutPoint {
            source: q,
            point: map_point(c.point, c.distance)?,
            distance: c.distance,
            kind: c.kind,
            nu: c.nu,
        });
    }
    let parallel_r = base.parallel_r;
    let max_parallel_deviation = match parallel_r {
        Some(pr) => cut_points
            .iter()
            .map(|c| (c.point.r - pr).abs())
            .fold(0.0f64, f64::max),
        None => 0.0,
    };
    // Both extent endpoints are reached at the same distance, so the
    // Killing flows shift them by a common angle.
    let theta_extent = match (base.theta_extent, base.extent_endpoint_distance) {
        (Some((lo, hi)), Some(l)) => {
            let shift = match (chain.v0.rotation_rate(), chain.v.rotation_rate()) {
                (Some(mu0), Some(mu1)) => (mu0 + mu1) * l,
                _ => {
                    let pr = parallel_r.unwrap_or(q.r);
                    let mapped = map_point(SurfacePoint::new(pr, lo), l)?;
                    wrap_delta(mapped.theta - lo)
                }
            };
            if shift == 0.0 {
                Some((lo, hi))
            } else {
                Some((lo + shift, hi + shift))
            }
        }
        (extent, _) => extent,
    };

    Ok(CutLocusResult {
        source: q,
        cut_points,
        parallel_r,
        max_parallel_deviation,
        theta_extent,
        extent_endpoint_distance: base.extent_endpoint_distance,
        warnings: base.warnings,
    })
}

/// Signed angular displacement in `(-pi, pi]`.
fn wrap_delta(d: f64) -> f64 {
    crate::surface::wrap_angle_signed(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::ProfileSpec;
    use std::f64::consts::FRAC_PI_3;

    fn round() -> Surface {
        Surface::new(ProfileSpec::round()).unwrap()
    }

    fn twisted() -> Surface {
        Surface::new(ProfileSpec::twisted_sine(0.25).unwrap()).unwrap()
    }

    fn arcsin() -> Surface {
        Surface::new(ProfileSpec::arcsin_ratio(1.0).unwrap()).unwrap()
    }

    #[test]
    fn round_half_period_is_pi() {
        let s = round();
        for nu in [0.5, 0.9] {
            let phi = half_period(&s, nu, 1e-10).unwrap();
            assert!((phi - PI).abs() < 1e-9, "phi({nu}) = {phi}");
        }
    }

    #[test]
    fn twisted_half_period_decreases() {
        let s = twisted();
        let p3 = half_period(&s, 0.3, 1e-8).unwrap();
        let p6 = half_period(&s, 0.6, 1e-8).unwrap();
        assert!(p3 > p6, "phi(0.3)={p3} vs phi(0.6)={p6}");
    }

    #[test]
    fn half_period_domain_errors() {
        let s = twisted();
        assert!(half_period(&s, 0.0, 1e-8).is_err());
        assert!(half_period(&s, -0.2, 1e-8).is_err());
        assert!(half_period(&s, s.equator_m(), 1e-8).is_err());
    }

    #[test]
    fn scans_are_monotone_for_builtin_profiles() {
        for s in [round(), twisted(), arcsin()] {
            let table = scan_half_period(&s, 16).unwrap();
            assert!(table.monotone, "{:?}", s.profile().family());
            assert!(table.phi_values.iter().all(|v| v.is_finite() && *v > 0.0));
        }
        let spread = {
            let t = scan_half_period(&round(), 16).unwrap();
            t.phi_values
                .iter()
                .map(|v| (v - PI).abs())
                .fold(0.0f64, f64::max)
        };
        assert!(spread < 1e-8, "round-sphere table spread {spread}");
        assert!(scan_half_period(&round(), 7).is_err());
    }

    #[test]
    fn round_cut_locus_is_the_antipode() {
        let s = round();
        let q = SurfacePoint::new(FRAC_PI_2, 0.0);
        let res = riemann_cut_locus(&s, q, 64, 7.0, 1e-3).unwrap();
        assert!((res.parallel_r.unwrap() - FRAC_PI_2).abs() < 1e-5);
        for c in &res.cut_points {
            assert!((c.point.r - FRAC_PI_2).abs() < 1e-5);
            assert!(wrap_delta(c.point.theta - PI).abs() < 1e-5);
            assert!((c.distance - PI).abs() < 1e-5);
        }
        let (lo, hi) = res.theta_extent.unwrap();
        assert!(hi - lo < 1e-4, "extent width {}", hi - lo);
    }

    #[test]
    fn round_cut_locus_off_equator() {
        let s = round();
        let q = SurfacePoint::new(1.0, 0.5);
        let res = riemann_cut_locus(&s, q, 64, 7.0, 1e-3).unwrap();
        assert!((res.parallel_r.unwrap() - (PI - 1.0)).abs() < 1e-5);
        for c in &res.cut_points {
            assert!(wrap_delta(c.point.theta - (0.5 + PI)).abs() < 1e-5);
            assert!((c.distance - PI).abs() < 1e-5);
        }
    }

    #[test]
    fn twisted_cut_sits_on_antipodal_parallel_and_matches_quadrature() {
        let s = twisted();
        let q = SurfacePoint::new(FRAC_PI_3, 0.0);
        let res = riemann_cut_locus(&s, q, 64, 9.0, 1e-3).unwrap();
        let target = PI - FRAC_PI_3;
        assert!(
            (res.parallel_r.unwrap() - target).abs() < 2e-4,
            "parallel at {:?}",
            res.parallel_r
        );
        assert!(res.max_parallel_deviation < 1e-3);

        // Independent oracle: each Maxwell meeting sits at theta =
        // phi(nu) past the source meridian.
        for c in res.cut_points.iter().filter(|c| c.kind == CutKind::Maxwell) {
            let predicted = half_period(&s, c.nu, 1e-10).unwrap();
            let measured = wrap_delta(c.point.theta - q.theta).abs();
            assert!(
                (measured - predicted).abs() < 1e-5,
                "nu={} fan theta={measured} quadrature={predicted}",
                c.nu
            );
        }

        // Mirror symmetry about the source meridian.
        for c in &res.cut_points {
            let mirror_theta = crate::surface::wrap_angle(-c.point.theta);
            assert!(
                res.cut_points.iter().any(|d| {
                    (d.point.r - c.point.r).abs() < 1e-9
                        && wrap_delta(d.point.theta - mirror_theta).abs() < 1e-9
                }),
                "mirror of {:?} missing",
                c.point
            );
        }
    }

    #[test]
    fn cut_comes_before_conjugate_along_fan_directions() {
        let s = twisted();
        let q = SurfacePoint::new(FRAC_PI_3, 0.0);
        for k in 0..8 {
            let phi = 0.15 + 1.3 * (k as f64) / 7.0;
            let meet = pair_meet(&s, q, phi, 9.0, 1e-3).unwrap().unwrap();
            if let Some(conj) = meet.conjugate {
                assert!(
                    meet.s <= conj + 1e-6,
                    "phi={phi}: maxwell {} conjugate {conj}",
                    meet.s
                );
            }
        }
    }

    #[test]
    fn theta_extent_grows_toward_the_equator() {
        // Larger source radius -> larger m(r0) -> smaller half-period at
        // the tangency limit -> wider antipodal arc.
        let s = twisted();
        let mut widths = Vec::new();
        for r0 in [0.6, 0.9, 1.2] {
            let res = riemann_cut_locus(&s, SurfacePoint::new(r0, 0.0), 64, 9.0, 1e-3).unwrap();
            let (lo, hi) = res.theta_extent.unwrap();
            widths.push(hi - lo);

            // The arc endpoint agrees with the tangency-limit quadrature.
            let endpoint = half_period(&s, s.m(r0) * (1.0 - 5e-7), 1e-10).unwrap();
            assert!(
                (lo - endpoint).abs() < 1e-4,
                "r0={r0}: endpoint {lo} vs quadrature {endpoint}"
            );
        }
        assert!(
            widths[0] < widths[1] && widths[1] < widths[2],
            "widths {widths:?}"
        );
    }

    #[test]
    fn zero_rotation_chain_reduces_to_riemann_exactly() {
        let s = twisted();
        let chain = NavigationChain::new(
            s.clone(),
            VectorFieldSpec::zero(),
            VectorFieldSpec::zero(),
            VectorFieldSpec::radial_ratio(),
        );
        let q = SurfacePoint::new(FRAC_PI_3, 0.0);
        let direct = riemann_cut_locus(&s, q, 64, 9.0, 1e-3).unwrap();
        let chained = randers_cut_locus(&chain, q, 64, 9.0, 1e-3).unwrap();
        assert_eq!(direct.cut_points.len(), chained.cut_points.len());
        for (a, b) in direct.cut_points.iter().zip(&chained.cut_points) {
            assert_eq!(a.point.r, b.point.r);
            assert_eq!(a.point.theta, b.point.theta);
            assert_eq!(a.distance, b.distance);
        }
        assert_eq!(direct.theta_extent, chained.theta_extent);
    }

    #[test]
    fn chain_certification_rejects_bad_stages() {
        let s = twisted();
        let q = SurfacePoint::new(FRAC_PI_3, 0.0);

        // C0: a radial field is not Killing.
        let bad0 = NavigationChain::new(
            s.clone(),
            VectorFieldSpec::radial_sin(0.2),
            VectorFieldSpec::zero(),
            VectorFieldSpec::zero(),
        );
        let err = randers_cut_locus(&bad0, q, 64, 9.0, 1e-3).unwrap_err();
        assert!(err.to_string().contains("(C0)"), "{err}");

        // C2: a lone rotation leaves the total one-form non-closed.
        let bad2 = NavigationChain::new(
            s.clone(),
            VectorFieldSpec::zero(),
            VectorFieldSpec::zero(),
            VectorFieldSpec::rotation(0.2),
        );
        let err = randers_cut_locus(&bad2, q, 64, 9.0, 1e-3).unwrap_err();
        assert!(err.to_string().contains("(C2)"), "{err}");
    }

    #[test]
    fn rotation_chain_rotates_cut_points_by_combined_rate() {
        let s = twisted();
        let q = SurfacePoint::new(FRAC_PI_3, 0.0);
        let chain = NavigationChain::new(
            s.clone(),
            VectorFieldSpec::rotation(0.15),
            VectorFieldSpec::rotation(0.15),
            VectorFieldSpec::sum(vec![
                VectorFieldSpec::radial_ratio(),
                VectorFieldSpec::rotation(-0.3),
            ]),
        );
        let base = riemann_cut_locus(&s, q, 64, 9.0, 1e-3).unwrap();
        let moved = randers_cut_locus(&chain, q, 64, 9.0, 1e-3).unwrap();
        for (a, b) in base.cut_points.iter().zip(&moved.cut_points) {
            let expected = crate::surface::wrap_angle(a.point.theta + 0.3 * a.distance);
            assert!(
                wrap_delta(b.point.theta - expected).abs() < 1e-9,
                "got {} want {expected}",
                b.point.theta
            );
            assert_eq!(a.point.r, b.point.r);
        }
    }

    #[test]
    fn conjugate_locus_round_sphere_collapses_to_antipode() {
        let s = round();
        let q = SurfacePoint::new(1.2, 0.0);
        let points = conjugate_locus(&s, q, 64, 4.0, 1e-3).unwrap();
        assert!(!points.is_empty());
        for c in &points {
            assert!((c.distance - PI).abs() < 1e-4, "distance {}", c.distance);
            // Antipode of (1.2, 0) is (pi - 1.2, pi).
            if c.angle.cos().abs() > 0.05 {
                assert!((c.point.r - (PI - 1.2)).abs() < 1e-4);
                assert!(wrap_delta(c.point.theta - PI).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn twisted_conjugate_locus_stays_outside_cut_distances() {
        let s = twisted();
        let q = SurfacePoint::new(FRAC_PI_3, 0.0);
        let cut = riemann_cut_locus(&s, q, 64, 9.0, 1e-3).unwrap();
        let conj = conjugate_locus(&s, q, 64, 9.0, 1e-3).unwrap();
        assert!(!conj.is_empty());
        let min_conj = conj.iter().map(|c| c.distance).fold(f64::INFINITY, f64::min);
        // Every Maxwell distance is bounded by some conjugate distance in
        // a matching direction; globally, cut distances cannot exceed the
        // conjugate sweep's maximum.
        let max_cut = cut
            .cut_points
            .iter()
            .map(|c| c.distance)
            .fold(0.0f64, f64::max);
        let max_conj = conj.iter().map(|c| c.distance).fold(0.0f64, f64::max);
        assert!(max_cut <= max_conj + 1e-6);
        assert!(min_conj > 0.0);
    }
}
