//! Two-spheres of revolution generated by a profile function.
//!
//! A profile `h` on `[0, pi]` with `h(0)=0`, `h(pi)=pi`, `h'(0)>0` generates
//! the warp `m(r) = a sin(h(r))` with `a = 1/h'(0)`, and the metric
//! `dr^2 + m^2(r) dtheta^2` in geodesic polar coordinates with poles at
//! `r = 0` and `r = pi`. The chart is singular at the poles, so every
//! evaluator excludes a small guard band around them.
//!
//! The built-in families:
//! - round: `h(r) = r` (unit sphere),
//! - twisted sine: `h(r) = r - alpha*sin(2r)`, `alpha` in (0, 1/2),
//! - arcsin ratio: `h(r) = arcsin(sin r / sqrt(1 + lambda*cos^2 r))`,
//!   `lambda >= 0`.
//!
//! Three conditions on `h` control the cut-locus structure downstream:
//! (c1) `h(pi-r) = pi - h(r)`, (c2) `h' > 0` on `[0, pi/2)`,
//! (c3) `h'' > 0` on `(0, pi/2)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Half-width of the chart band excluded around each pole.
pub const POLE_GUARD: f64 = 1e-6;

/// Tolerance used when testing the exact symmetry (c1) on a grid.
pub const C1_TOL: f64 = 1e-9;

/// Shared callable for custom profile data.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Profile family together with its parameters.
#[derive(Clone)]
pub enum ProfileFamily {
    /// `h(r) = r`; the unit round sphere.
    RoundSphere,
    /// `h(r) = r - alpha*sin(2r)` with `alpha` in `(0, 1/2)`.
    TwistedSine { alpha: f64 },
    /// `h(r) = arcsin(sin r / sqrt(1 + lambda*cos^2 r))` with `lambda >= 0`.
    ArcsinRatio { lambda: f64 },
    /// User-supplied `h`, `h'`, `h''`; no validation beyond use.
    Custom {
        h: RealFn,
        dh: RealFn,
        ddh: RealFn,
        label: String,
    },
}

impl fmt::Debug for ProfileFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileFamily::RoundSphere => write!(f, "RoundSphere"),
            ProfileFamily::TwistedSine { alpha } => write!(f, "TwistedSine({alpha})"),
            ProfileFamily::ArcsinRatio { lambda } => write!(f, "ArcsinRatio({lambda})"),
            ProfileFamily::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

/// A validated profile with analytic first and second derivatives.
#[derive(Clone, Debug)]
pub struct ProfileSpec {
    family: ProfileFamily,
}

/// Validates the family parameters and wraps them as a [`ProfileSpec`].
pub fn make_profile(family: ProfileFamily) -> Result<ProfileSpec> {
    match &family {
        ProfileFamily::TwistedSine { alpha } => {
            if !(*alpha > 0.0 && *alpha < 0.5) {
                return Err(Error::InvalidParameter(format!(
                    "twisted-sine alpha must lie in (0, 1/2), got {alpha}"
                )));
            }
        }
        ProfileFamily::ArcsinRatio { lambda } => {
            if !(*lambda >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "arcsin-ratio lambda must be >= 0, got {lambda}"
                )));
            }
        }
        ProfileFamily::RoundSphere | ProfileFamily::Custom { .. } => {}
    }
    Ok(ProfileSpec { family })
}

impl ProfileSpec {
    pub fn round() -> Self {
        ProfileSpec {
            family: ProfileFamily::RoundSphere,
        }
    }

    pub fn twisted_sine(alpha: f64) -> Result<Self> {
        make_profile(ProfileFamily::TwistedSine { alpha })
    }

    pub fn arcsin_ratio(lambda: f64) -> Result<Self> {
        make_profile(ProfileFamily::ArcsinRatio { lambda })
    }

    /// Profile from user-supplied `h`, `h'`, `h''`.
    pub fn custom(h: RealFn, dh: RealFn, ddh: RealFn, label: impl Into<String>) -> Self {
        ProfileSpec {
            family: ProfileFamily::Custom {
                h,
                dh,
                ddh,
                label: label.into(),
            },
        }
    }

    pub fn family(&self) -> &ProfileFamily {
        &self.family
    }

    /// Config-facing identifier of the family.
    pub fn id(&self) -> &'static str {
        match self.family {
            ProfileFamily::RoundSphere => "round",
            ProfileFamily::TwistedSine { .. } => "twisted-sine",
            ProfileFamily::ArcsinRatio { .. } => "arcsin-ratio",
            ProfileFamily::Custom { .. } => "custom",
        }
    }

    /// Profile value `h(r)`.
    pub fn h(&self, r: f64) -> f64 {
        match &self.family {
            ProfileFamily::RoundSphere => r,
            ProfileFamily::TwistedSine { alpha } => r - alpha * (2.0 * r).sin(),
            ProfileFamily::ArcsinRatio { lambda } => {
                // Equivalent to asin(sin r / sqrt(1 + lambda cos^2 r)) on
                // [0, pi], but atan2 picks the correct branch past the equator
                // and stays well conditioned where the asin argument nears 1.
                f64::atan2(r.sin(), (1.0 + lambda).sqrt() * r.cos())
            }
            ProfileFamily::Custom { h, .. } => h(r),
        }
    }

    /// First derivative `h'(r)`.
    pub fn dh(&self, r: f64) -> f64 {
        match &self.family {
            ProfileFamily::RoundSphere => 1.0,
            ProfileFamily::TwistedSine { alpha } => 1.0 - 2.0 * alpha * (2.0 * r).cos(),
            ProfileFamily::ArcsinRatio { lambda } => {
                let c = r.cos();
                (1.0 + lambda).sqrt() / (1.0 + lambda * c * c)
            }
            ProfileFamily::Custom { dh, .. } => dh(r),
        }
    }

    /// Second derivative `h''(r)`.
    pub fn ddh(&self, r: f64) -> f64 {
        match &self.family {
            ProfileFamily::RoundSphere => 0.0,
            ProfileFamily::TwistedSine { alpha } => 4.0 * alpha * (2.0 * r).sin(),
            ProfileFamily::ArcsinRatio { lambda } => {
                let c = r.cos();
                let d = 1.0 + lambda * c * c;
                lambda * (1.0 + lambda).sqrt() * (2.0 * r).sin() / (d * d)
            }
            ProfileFamily::Custom { ddh, .. } => ddh(r),
        }
    }
}

/// Per-condition grid report produced by [`check_profile_conditions`].
#[derive(Debug, Clone)]
pub struct ConditionReport {
    /// `h(pi-r) = pi - h(r)` within [`C1_TOL`] on the grid.
    pub c1: bool,
    /// `h'(r) > 0` on `[0, pi/2)`.
    pub c2: bool,
    /// `h''(r) > 0` on `(0, pi/2)`.
    pub c3: bool,
    /// Grid point of largest symmetry defect and its value.
    pub worst_c1: (f64, f64),
    /// Grid point of smallest `h'` and its value.
    pub worst_c2: (f64, f64),
    /// Grid point of smallest `h''` and its value.
    pub worst_c3: (f64, f64),
}

impl ConditionReport {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }
}

/// Evaluates conditions (c1)-(c3) on a uniform grid of `(0, pi/2)`.
///
/// `grid_n` is clamped to at least 16. Report-only: never fails.
pub fn check_profile_conditions(spec: &ProfileSpec, grid_n: usize) -> ConditionReport {
    let n = grid_n.max(16);
    let mut worst_c1 = (0.0f64, 0.0f64);
    let mut worst_c2 = (0.0f64, spec.dh(0.0));
    let mut worst_c3 = (f64::NAN, f64::INFINITY);
    for i in 0..n {
        let r = (i as f64 + 0.5) * FRAC_PI_2 / n as f64;
        let sym = (spec.h(PI - r) - (PI - spec.h(r))).abs();
        if sym > worst_c1.1 {
            worst_c1 = (r, sym);
        }
        let d1 = spec.dh(r);
        if d1 < worst_c2.1 {
            worst_c2 = (r, d1);
        }
        let d2 = spec.ddh(r);
        if d2 < worst_c3.1 {
            worst_c3 = (r, d2);
        }
    }
    ConditionReport {
        c1: worst_c1.1 < C1_TOL,
        c2: worst_c2.1 > 0.0,
        c3: worst_c3.1 > 0.0,
        worst_c1,
        worst_c2,
        worst_c3,
    }
}

/// A two-sphere of revolution: profile plus normalization `a = 1/h'(0)`.
#[derive(Clone, Debug)]
pub struct Surface {
    profile: ProfileSpec,
    a: f64,
    pole_guard: f64,
}

impl Surface {
    /// Builds the surface with warp `m(r) = a sin(h(r))`, `a = 1/h'(0)`.
    pub fn new(profile: ProfileSpec) -> Result<Self> {
        let d0 = profile.dh(0.0);
        if !(d0 > 0.0) || !d0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "profile needs h'(0) > 0 to normalize the warp, got {d0}"
            )));
        }
        Ok(Surface {
            profile,
            a: 1.0 / d0,
            pole_guard: POLE_GUARD,
        })
    }

    pub fn with_pole_guard(mut self, guard: f64) -> Self {
        self.pole_guard = guard;
        self
    }

    pub fn profile(&self) -> &ProfileSpec {
        &self.profile
    }

    /// Normalization constant `a = 1/h'(0)`, also `m(pi/2)` for symmetric profiles.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn pole_guard(&self) -> f64 {
        self.pole_guard
    }

    /// Rejects chart radii inside the pole guard band.
    pub fn guard_check(&self, r: f64) -> Result<()> {
        if r < self.pole_guard || r > PI - self.pole_guard || !r.is_finite() {
            Err(Error::PoleGuard {
                r,
                guard: self.pole_guard,
            })
        } else {
            Ok(())
        }
    }

    /// True when `r` lies strictly inside the guard band limits.
    pub fn inside_guard(&self, r: f64) -> bool {
        r >= self.pole_guard && r <= PI - self.pole_guard && r.is_finite()
    }

    /// Warp `m(r) = a sin(h(r))`.
    pub fn m(&self, r: f64) -> f64 {
        self.a * self.profile.h(r).sin()
    }

    /// `m'(r) = a h'(r) cos(h(r))`.
    pub fn dm(&self, r: f64) -> f64 {
        self.a * self.profile.dh(r) * self.profile.h(r).cos()
    }

    /// `m''(r) = a (h''(r) cos(h(r)) - h'(r)^2 sin(h(r)))`.
    pub fn ddm(&self, r: f64) -> f64 {
        let h = self.profile.h(r);
        self.a * (self.profile.ddh(r) * h.cos() - self.profile.dh(r).powi(2) * h.sin())
    }

    /// Warp at the equator, the maximum of `m` for admissible profiles.
    pub fn equator_m(&self) -> f64 {
        self.m(FRAC_PI_2)
    }

    /// Gaussian curvature `G(r) = -m''(r)/m(r)`.
    pub fn gauss_curvature(&self, r: f64) -> Result<f64> {
        self.guard_check(r)?;
        Ok(-self.ddm(r) / self.m(r))
    }

    /// Inverse of the warp on `[0, pi/2]` by bisection to 1e-12.
    ///
    /// Requires (c2), so that `m` is strictly increasing there.
    pub fn m_inverse(&self, nu: f64) -> Result<f64> {
        let top = self.equator_m();
        if !(nu >= 0.0 && nu <= top) {
            return Err(Error::Domain(format!(
                "warp inverse needs nu in [0, {top:.6}], got {nu}"
            )));
        }
        let (mut lo, mut hi) = (0.0f64, FRAC_PI_2);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.m(mid) < nu {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Gaussian curvature through the surface's analytic `m''`.
pub fn gauss_curvature(surface: &Surface, r: f64) -> Result<f64> {
    surface.gauss_curvature(r)
}

/// Direct closed-form curvature of the built-in families.
///
/// Independent of the `-m''/m` evaluation path; used as its oracle.
/// For the twisted sine `cot(h(r))` diverges at the poles while the
/// product stays finite, so the domain is restricted to the guard band
/// rather than resolving the limit. Custom profiles have no closed form.
pub fn closed_form_curvature(spec: &ProfileSpec, r: f64) -> Result<f64> {
    if r < POLE_GUARD || r > PI - POLE_GUARD {
        return Err(Error::PoleGuard {
            r,
            guard: POLE_GUARD,
        });
    }
    match spec.family {
        ProfileFamily::RoundSphere => Ok(1.0),
        ProfileFamily::TwistedSine { alpha } => {
            let s2 = (2.0 * r).sin();
            let c2 = (2.0 * r).cos();
            let h = r - alpha * s2;
            let cot = h.cos() / h.sin();
            Ok((1.0 - 2.0 * alpha * c2).powi(2) - 4.0 * alpha * s2 * cot)
        }
        ProfileFamily::ArcsinRatio { lambda } => {
            let c = r.cos();
            let d = 1.0 + lambda * c * c;
            Ok((1.0 + lambda) * (1.0 - 2.0 * lambda * c * c) / (d * d))
        }
        _ => Err(Error::UnsupportedFamily(
            spec.id().to_string(),
        )),
    }
}

/// Chart point `(r, theta)` with `theta` stored in `[0, 2*pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub r: f64,
    pub theta: f64,
}

impl SurfacePoint {
    pub fn new(r: f64, theta: f64) -> Self {
        SurfacePoint {
            r,
            theta: wrap_angle(theta),
        }
    }
}

/// Normalizes an angle into `[0, 2*pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta % two_pi;
    if t < 0.0 {
        t += two_pi;
    }
    // The remainder can round up to exactly 2*pi.
    if t >= two_pi {
        t = 0.0;
    }
    t
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle_signed(d: f64) -> f64 {
    let mut t = wrap_angle(d);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}
