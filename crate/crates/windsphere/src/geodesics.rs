//! Geodesic integration and conjugate-point machinery.
//!
//! Two integration routes, both fixed-step RK4 (step 1e-3 by default so
//! traces stay alignable sample-by-sample):
//! - h-geodesics from the second-order chart equations
//!   `r'' = m m' theta'^2`, `theta'' = -2 (m'/m) r' theta'`;
//! - Randers geodesics in the cotangent bundle with the navigation
//!   Hamiltonian `K~ = sqrt(h^ij p_i p_j) + W^i p_i`; `dx = dK~/dp` is
//!   analytic in `p`, `dp = -dK~/dx` uses central differences in `x`.
//!   Any `K~ = 1` trajectory projects to a unit-speed Finsler geodesic.
//!
//! Conjugate points on h-geodesics come from the scalar Jacobi equation
//! `J'' + G(r(s)) J = 0`; for Randers geodesics an independent check
//! finite-differences neighboring geodesics and watches the variation
//! determinant vanish.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{flow_advance, FlowMap, VectorFieldSpec};
use crate::metrics::{riemann_eval, Covector, MetricMatrix, NavigationData};
use crate::surface::{wrap_angle_signed, Surface, SurfacePoint, POLE_GUARD};

/// Finite-difference step for `dp = -dK/dx` in Hamiltonian integration.
pub const HAMILTONIAN_FD_STEP: f64 = 1e-6;

/// Angle perturbation for the geodesic-variation conjugate-point check.
pub const VARIATION_DELTA: f64 = 1e-4;

/// Which metric a trace belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricTag {
    /// The base Riemannian metric.
    H,
    /// First navigation stage.
    F0,
    /// Second stage (after translating by a base-Killing field).
    F1,
    /// Third stage (after a closed-form translation).
    F2,
    /// The Riemannian part of the third stage, used for the
    /// shared-geodesics check.
    Alpha2,
}

impl MetricTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricTag::H => "h",
            MetricTag::F0 => "F0",
            MetricTag::F1 => "F1",
            MetricTag::F2 => "F2",
            MetricTag::Alpha2 => "alpha2",
        }
    }
}

/// Instantaneous geodesic state; `theta` is kept unwrapped along traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicState {
    pub r: f64,
    pub theta: f64,
    pub dr: f64,
    pub dtheta: f64,
}

impl GeodesicState {
    /// Unit-speed state from the angle `phi` between the tangent and the
    /// parallel through the point: tangent
    /// `sin(phi) d/dr + (cos(phi)/m) d/dtheta`.
    pub fn from_angle(surface: &Surface, r: f64, theta: f64, phi: f64) -> Result<Self> {
        surface.guard_check(r)?;
        let m = surface.m(r);
        Ok(GeodesicState {
            r,
            theta,
            dr: phi.sin(),
            dtheta: phi.cos() / m,
        })
    }

    /// Angle to the parallel, `atan2(dr, m dtheta)`.
    pub fn angle_phi(&self, surface: &Surface) -> f64 {
        (self.dr).atan2(surface.m(self.r) * self.dtheta)
    }

    /// `|dr^2 + m^2 dtheta^2 - 1|`.
    pub fn unit_speed_defect(&self, surface: &Surface) -> f64 {
        let m = surface.m(self.r);
        (self.dr * self.dr + m * m * self.dtheta * self.dtheta - 1.0).abs()
    }

    pub fn point(&self) -> SurfacePoint {
        SurfacePoint::new(self.r, self.theta)
    }
}

/// The conserved quantity `nu = m(r) cos(Phi)` with `cos(Phi) = m dtheta`.
pub fn clairaut_constant(surface: &Surface, state: &GeodesicState) -> f64 {
    let m = surface.m(state.r);
    m * m * state.dtheta
}

/// An arclength-sampled geodesic.
#[derive(Debug, Clone)]
pub struct GeodesicTrace {
    /// `(s, state)` with strictly increasing `s`, starting at `s = 0`.
    pub samples: Vec<(f64, GeodesicState)>,
    pub metric_tag: MetricTag,
    pub step: f64,
    /// True when integration stopped early at the pole guard band.
    pub hit_pole_guard: bool,
    /// Max observed drift of the route's invariant (unit speed for h,
    /// `K~` for Hamiltonian routes).
    pub max_invariant_drift: f64,
}

impl GeodesicTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Arclength of the last sample.
    pub fn last_s(&self) -> f64 {
        self.samples.last().map(|(s, _)| *s).unwrap_or(0.0)
    }

    /// Cubic-Hermite interpolated state at `s` (clamped to the range).
    pub fn state_at(&self, s: f64) -> GeodesicState {
        let samples = &self.samples;
        if s <= samples[0].0 {
            return samples[0].1;
        }
        if s >= self.last_s() {
            return samples[samples.len() - 1].1;
        }
        let idx = match samples.binary_search_by(|(si, _)| si.partial_cmp(&s).unwrap()) {
            Ok(i) => return samples[i].1,
            Err(i) => i - 1,
        };
        let (s0, a) = samples[idx];
        let (s1, b) = samples[idx + 1];
        let h = s1 - s0;
        let t = (s - s0) / h;
        let hermite = |y0: f64, y1: f64, d0: f64, d1: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
                + d0 * h * (t3 - 2.0 * t2 + t)
                + y1 * (-2.0 * t3 + 3.0 * t2)
                + d1 * h * (t3 - t2)
        };
        let dlin = |d0: f64, d1: f64| d0 + (d1 - d0) * t;
        GeodesicState {
            r: hermite(a.r, b.r, a.dr, b.dr),
            theta: hermite(a.theta, b.theta, a.dtheta, b.dtheta),
            dr: dlin(a.dr, b.dr),
            dtheta: dlin(a.dtheta, b.dtheta),
        }
    }

    pub fn position_at(&self, s: f64) -> SurfacePoint {
        self.state_at(s).point()
    }
}

const UNIT_SPEED_INIT_TOL: f64 = 1e-6;

/// Integrates an h-geodesic for `length` from a unit-speed initial state.
///
/// Fixed-step RK4; if the trajectory reaches the pole guard band the trace
/// is returned truncated with `hit_pole_guard` set.
pub fn integrate_h_geodesic(
    surface: &Surface,
    init: &GeodesicState,
    length: f64,
    step: f64,
) -> Result<GeodesicTrace> {
    if !(step > 0.0) || !(length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need positive length and step, got length={length}, step={step}"
        )));
    }
    surface.guard_check(init.r)?;
    if init.unit_speed_defect(surface) > UNIT_SPEED_INIT_TOL {
        return Err(Error::InvalidParameter(format!(
            "initial state is not unit-speed (defect {:.3e})",
            init.unit_speed_defect(surface)
        )));
    }

    let rhs = |y: [f64; 4]| -> [f64; 4] {
        let m = surface.m(y[0]);
        let dm = surface.dm(y[0]);
        [
            y[2],
            y[3],
            m * dm * y[3] * y[3],
            -2.0 * (dm / m) * y[2] * y[3],
        ]
    };

    let n_full = (length / step).floor() as usize;
    let rem = length - (n_full as f64) * step;
    let mut samples = Vec::with_capacity(n_full + 2);
    let mut y = [init.r, init.theta, init.dr, init.dtheta];
    let mut s = 0.0;
    let mut drift: f64 = 0.0;
    let mut hit_pole_guard = false;
    let push = |samples: &mut Vec<(f64, GeodesicState)>, s: f64, y: [f64; 4]| {
        samples.push((
            s,
            GeodesicState {
                r: y[0],
                theta: y[1],
                dr: y[2],
                dtheta: y[3],
            },
        ));
    };
    push(&mut samples, s, y);

    let total_steps = n_full + usize::from(rem > 1e-12);
    for i in 0..total_steps {
        let h = if i < n_full { step } else { rem };
        y = rk4_step(&rhs, y, h);
        s += h;
        if !surface.inside_guard(y[0]) {
            hit_pole_guard = true;
            break;
        }
        push(&mut samples, s, y);
        let m = surface.m(y[0]);
        drift = drift.max((y[2] * y[2] + m * m * y[3] * y[3] - 1.0).abs());
    }

    Ok(GeodesicTrace {
        samples,
        metric_tag: MetricTag::H,
        step,
        hit_pole_guard,
        max_invariant_drift: drift,
    })
}

fn rk4_step(rhs: &impl Fn([f64; 4]) -> [f64; 4], y: [f64; 4], h: f64) -> [f64; 4] {
    let add = |a: [f64; 4], b: [f64; 4], c: f64| {
        [
            a[0] + c * b[0],
            a[1] + c * b[1],
            a[2] + c * b[2],
            a[3] + c * b[3],
        ]
    };
    let k1 = rhs(y);
    let k2 = rhs(add(y, k1, 0.5 * h));
    let k3 = rhs(add(y, k2, 0.5 * h));
    let k4 = rhs(add(y, k3, h));
    let mut out = y;
    for j in 0..4 {
        out[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    out
}

/// Finsler norm of a chart vector under navigation data `(h, wind)`:
/// the positive root of `||y - F W||_h = F`.
pub fn finsler_norm_from_navigation(
    surface: &Surface,
    wind: &VectorFieldSpec,
    p: SurfacePoint,
    y: [f64; 2],
) -> Result<f64> {
    let h = riemann_eval(surface, p)?;
    let w = wind.eval(p.r, p.theta);
    let lambda = 1.0 - h.norm_sq(w);
    if lambda <= 0.0 {
        return Err(Error::NonConvex {
            what: "||wind||_h",
            value: h.norm_sq(w).sqrt(),
        });
    }
    let yw = h.inner(y, w);
    Ok(((yw * yw + lambda * h.norm_sq(y)).sqrt() - yw) / lambda)
}

/// Initial covector whose Hamiltonian trajectory leaves `q` in the chart
/// direction `y`, normalized to `K~ = 1`.
///
/// Closed form `p = h_flat(u) / (1 + <W, u>_h)` with `u = y/F(y) - W`,
/// then a damped Newton polish of the 2x2 Legendre relation to 1e-12.
pub fn covector_for_velocity(
    nav: &NavigationData,
    q: SurfacePoint,
    y: [f64; 2],
) -> Result<Covector> {
    let surface = nav
        .surface()
        .ok_or_else(|| Error::Domain("covector solve needs a Riemannian base".into()))?;
    let h = riemann_eval(surface, q)?;
    let w = nav.wind.eval(q.r, q.theta);
    let f = finsler_norm_from_navigation(surface, &nav.wind, q, y)?;
    if !(f > 0.0) {
        return Err(Error::Domain("direction vector must be nonzero".into()));
    }
    let yhat = [y[0] / f, y[1] / f];
    let u = [yhat[0] - w[0], yhat[1] - w[1]];
    let c = 1.0 + h.inner(w, u);
    let mut p = h.lower(u).scaled(1.0 / c);

    // Newton polish on  dK/dp (p) - yhat = 0.
    let m = surface.m(q.r);
    let velocity = |p: Covector| -> [f64; 2] {
        let k0 = (p.b_r * p.b_r + (p.b_theta / m) * (p.b_theta / m)).sqrt();
        [p.b_r / k0 + w[0], p.b_theta / (m * m * k0) + w[1]]
    };
    for _ in 0..25 {
        let v = velocity(p);
        let res = [v[0] - yhat[0], v[1] - yhat[1]];
        let err = (res[0] * res[0] + res[1] * res[1]).sqrt();
        if err < 1e-12 {
            break;
        }
        let d = 1e-7;
        let vr = velocity(Covector {
            b_r: p.b_r + d,
            ..p
        });
        let vt = velocity(Covector {
            b_theta: p.b_theta + d,
            ..p
        });
        let j = [
            [(vr[0] - v[0]) / d, (vt[0] - v[0]) / d],
            [(vr[1] - v[1]) / d, (vt[1] - v[1]) / d],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-14 {
            break;
        }
        let dp = [
            (res[0] * j[1][1] - res[1] * j[0][1]) / det,
            (res[1] * j[0][0] - res[0] * j[1][0]) / det,
        ];
        // Damping keeps the iterate away from p = 0 where K0 degenerates.
        let mut t = 1.0;
        let k0 = |p: Covector| (p.b_r * p.b_r + (p.b_theta / m) * (p.b_theta / m)).sqrt();
        while t > 1e-4 {
            let cand = Covector {
                b_r: p.b_r - t * dp[0],
                b_theta: p.b_theta - t * dp[1],
            };
            if k0(cand) > 1e-8 {
                p = cand;
                break;
            }
            t *= 0.5;
        }
    }

    // Exact normalization via 1-homogeneity.
    let k0 = (p.b_r * p.b_r + (p.b_theta / m) * (p.b_theta / m)).sqrt();
    let k = k0 + w[0] * p.b_r + w[1] * p.b_theta;
    Ok(p.scaled(1.0 / k))
}

/// Integrates a Randers geodesic through the cotangent bundle.
///
/// The initial covector is rescaled to `K~ = 1`, so the projected curve is
/// the unit-speed Finsler geodesic. The trace records chart velocities
/// `dx = dK~/dp`.
pub fn integrate_randers_geodesic(
    nav: &NavigationData,
    q: SurfacePoint,
    p0: Covector,
    length: f64,
    step: f64,
    tag: MetricTag,
) -> Result<GeodesicTrace> {
    let surface = nav
        .surface()
        .ok_or_else(|| Error::Domain("Hamiltonian route needs a Riemannian base; sum chained winds first".into()))?;
    if !(step > 0.0) || !(length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need positive length and step, got length={length}, step={step}"
        )));
    }
    surface.guard_check(q.r)?;

    let kval = |y: [f64; 4]| -> f64 {
        let m = surface.m(y[0]);
        let k0 = (y[2] * y[2] + (y[3] / m) * (y[3] / m)).sqrt();
        let w = nav.wind.eval(y[0], y[1]);
        k0 + w[0] * y[2] + w[1] * y[3]
    };
    let velocity = |y: [f64; 4]| -> [f64; 2] {
        let m = surface.m(y[0]);
        let k0 = (y[2] * y[2] + (y[3] / m) * (y[3] / m)).sqrt();
        let w = nav.wind.eval(y[0], y[1]);
        [y[2] / k0 + w[0], y[3] / (m * m * k0) + w[1]]
    };
    let rhs = |y: [f64; 4]| -> [f64; 4] {
        let v = velocity(y);
        let d = HAMILTONIAN_FD_STEP;
        let dk_dr = (kval([y[0] + d, y[1], y[2], y[3]]) - kval([y[0] - d, y[1], y[2], y[3]]))
            / (2.0 * d);
        let dk_dt = (kval([y[0], y[1] + d, y[2], y[3]]) - kval([y[0], y[1] - d, y[2], y[3]]))
            / (2.0 * d);
        [v[0], v[1], -dk_dr, -dk_dt]
    };

    let k_init = kval([q.r, q.theta, p0.b_r, p0.b_theta]);
    if !(k_init > 0.0) || !k_init.is_finite() {
        return Err(Error::Domain(format!(
            "initial covector has nonpositive Hamiltonian value {k_init}"
        )));
    }
    let mut y = [q.r, q.theta, p0.b_r / k_init, p0.b_theta / k_init];

    // Admissibility of the wind at the start.
    {
        let h = riemann_eval(surface, q)?;
        let w = nav.wind.eval(q.r, q.theta);
        if h.norm_sq(w) >= 1.0 {
            return Err(Error::NonConvex {
                what: "||wind||_h",
                value: h.norm_sq(w).sqrt(),
            });
        }
    }

    let n_full = (length / step).floor() as usize;
    let rem = length - (n_full as f64) * step;
    let total_steps = n_full + usize::from(rem > 1e-12);
    let mut samples = Vec::with_capacity(total_steps + 1);
    let mut s = 0.0;
    let mut drift: f64 = 0.0;
    let mut hit_pole_guard = false;
    let push = |samples: &mut Vec<(f64, GeodesicState)>, s: f64, y: [f64; 4], v: [f64; 2]| {
        samples.push((
            s,
            GeodesicState {
                r: y[0],
                theta: y[1],
                dr: v[0],
                dtheta: v[1],
            },
        ));
    };
    push(&mut samples, s, y, velocity(y));

    for i in 0..total_steps {
        let h = if i < n_full { step } else { rem };
        y = rk4_step(&rhs, y, h);
        s += h;
        if !surface.inside_guard(y[0]) {
            hit_pole_guard = true;
            break;
        }
        let hm = riemann_eval(surface, SurfacePoint::new(y[0], y[1]))?;
        let w = nav.wind.eval(y[0], y[1]);
        if hm.norm_sq(w) >= 1.0 {
            return Err(Error::NonConvex {
                what: "||wind||_h",
                value: hm.norm_sq(w).sqrt(),
            });
        }
        push(&mut samples, s, y, velocity(y));
        drift = drift.max((kval(y) - 1.0).abs());
    }

    Ok(GeodesicTrace {
        samples,
        metric_tag: tag,
        step,
        hit_pole_guard,
        max_invariant_drift: drift,
    })
}

/// Integrates a unit-speed geodesic of a general chart co-metric
/// `g^ij(r, theta)` via `K = sqrt(g^ij p_i p_j)`.
///
/// Same scheme as the Randers route (analytic in `p`, finite differences
/// in `x`); used to compare geodesic point sets of projectively related
/// metrics.
pub fn integrate_cometric_geodesic(
    cometric: &dyn Fn(f64, f64) -> Result<MetricMatrix>,
    q: SurfacePoint,
    p0: Covector,
    length: f64,
    step: f64,
    tag: MetricTag,
) -> Result<GeodesicTrace> {
    if !(step > 0.0) || !(length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need positive length and step, got length={length}, step={step}"
        )));
    }
    let kval = |y: [f64; 4]| -> Result<f64> {
        let g = cometric(y[0], y[1])?;
        Ok(g
            .norm_sq([y[2], y[3]])
            .max(0.0)
            .sqrt())
    };
    let velocity = |y: [f64; 4]| -> Result<[f64; 2]> {
        let g = cometric(y[0], y[1])?;
        let k = g.norm_sq([y[2], y[3]]).max(0.0).sqrt();
        Ok([
            (g.g_rr * y[2] + g.g_rtheta * y[3]) / k,
            (g.g_rtheta * y[2] + g.g_thetatheta * y[3]) / k,
        ])
    };
    let rhs = |y: [f64; 4]| -> Result<[f64; 4]> {
        let v = velocity(y)?;
        let d = HAMILTONIAN_FD_STEP;
        let dk_dr = (kval([y[0] + d, y[1], y[2], y[3]])? - kval([y[0] - d, y[1], y[2], y[3]])?)
            / (2.0 * d);
        let dk_dt = (kval([y[0], y[1] + d, y[2], y[3]])? - kval([y[0], y[1] - d, y[2], y[3]])?)
            / (2.0 * d);
        Ok([v[0], v[1], -dk_dr, -dk_dt])
    };

    let k_init = kval([q.r, q.theta, p0.b_r, p0.b_theta])?;
    if !(k_init > 0.0) || !k_init.is_finite() {
        return Err(Error::Domain(format!(
            "initial covector has nonpositive co-metric norm {k_init}"
        )));
    }
    let mut y = [q.r, q.theta, p0.b_r / k_init, p0.b_theta / k_init];
    let n_full = (length / step).floor() as usize;
    let rem = length - (n_full as f64) * step;
    let total_steps = n_full + usize::from(rem > 1e-12);
    let mut samples = Vec::with_capacity(total_steps + 1);
    let mut s = 0.0;
    let mut drift: f64 = 0.0;
    let mut hit_pole_guard = false;
    let v0 = velocity(y)?;
    samples.push((
        s,
        GeodesicState {
            r: y[0],
            theta: y[1],
            dr: v0[0],
            dtheta: v0[1],
        },
    ));
    for i in 0..total_steps {
        let h = if i < n_full { step } else { rem };
        // RK4 with fallible RHS.
        let k1 = rhs(y)?;
        let adv = |a: [f64; 4], b: [f64; 4], c: f64| {
            [
                a[0] + c * b[0],
                a[1] + c * b[1],
                a[2] + c * b[2],
                a[3] + c * b[3],
            ]
        };
        let k2 = rhs(adv(y, k1, 0.5 * h))?;
        let k3 = rhs(adv(y, k2, 0.5 * h))?;
        let k4 = rhs(adv(y, k3, h))?;
        for j in 0..4 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        s += h;
        if y[0] < POLE_GUARD || y[0] > PI - POLE_GUARD || !y[0].is_finite() {
            hit_pole_guard = true;
            break;
        }
        let v = velocity(y)?;
        samples.push((
            s,
            GeodesicState {
                r: y[0],
                theta: y[1],
                dr: v[0],
                dtheta: v[1],
            },
        ));
        drift = drift.max((kval(y)? - 1.0).abs());
    }
    Ok(GeodesicTrace {
        samples,
        metric_tag: tag,
        step,
        hit_pole_guard,
        max_invariant_drift: drift,
    })
}

/// Scalar Jacobi solution along an h-geodesic trace.
#[derive(Debug, Clone)]
pub struct JacobiSolution {
    /// `(s, J, J')` on the trace's sample grid.
    pub samples: Vec<(f64, f64, f64)>,
    /// Smallest `s > 0` with `J(s) = 0`, bisection-refined to 1e-8.
    pub first_zero: Option<f64>,
}

/// Solves `J'' + G(r(s)) J = 0`, `J(0) = 0`, `J'(0) = 1` along the trace.
pub fn jacobi_along(surface: &Surface, trace: &GeodesicTrace) -> Result<JacobiSolution> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let g_at = |s: f64| -> Result<f64> {
        let st = trace.state_at(s);
        surface.gauss_curvature(st.r)
    };
    let mut samples = Vec::with_capacity(trace.len());
    let (mut j, mut dj) = (0.0f64, 1.0f64);
    samples.push((0.0, j, dj));
    let mut first_zero = None;
    for win in trace.samples.windows(2) {
        let (s0, _) = win[0];
        let (s1, _) = win[1];
        let h = s1 - s0;
        // Classical RK4 for (J, J') with G interpolated mid-step.
        let g0 = g_at(s0)?;
        let gm = g_at(s0 + 0.5 * h)?;
        let g1 = g_at(s1)?;
        let f = |g: f64, y: (f64, f64)| (y.1, -g * y.0);
        let k1 = f(g0, (j, dj));
        let k2 = f(gm, (j + 0.5 * h * k1.0, dj + 0.5 * h * k1.1));
        let k3 = f(gm, (j + 0.5 * h * k2.0, dj + 0.5 * h * k2.1));
        let k4 = f(g1, (j + h * k3.0, dj + h * k3.1));
        let j_next = j + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        let dj_next = dj + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);

        if first_zero.is_none() && j > 0.0 && j_next <= 0.0 {
            // Refine by bisection on the local cubic Hermite of J.
            let hermite = |t: f64| {
                let t2 = t * t;
                let t3 = t2 * t;
                j * (2.0 * t3 - 3.0 * t2 + 1.0)
                    + dj * h * (t3 - 2.0 * t2 + t)
                    + j_next * (-2.0 * t3 + 3.0 * t2)
                    + dj_next * h * (t3 - t2)
            };
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            while (hi - lo) * h > 1e-8 {
                let mid = 0.5 * (lo + hi);
                if hermite(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            first_zero = Some(s0 + 0.5 * (lo + hi) * h);
        }
        j = j_next;
        dj = dj_next;
        samples.push((s1, j, dj));
    }
    Ok(JacobiSolution {
        samples,
        first_zero,
    })
}

/// First conjugate distance along an h-geodesic trace, if any lies within
/// the trace length.
pub fn first_conjugate_distance(surface: &Surface, trace: &GeodesicTrace) -> Result<Option<f64>> {
    Ok(jacobi_along(surface, trace)?.first_zero)
}

/// First conjugate distance along a Randers geodesic, detected by the
/// vanishing determinant of the variation through neighboring geodesics.
///
/// `phi` parametrizes the start direction as `u(phi) + W(q)` with `u` the
/// h-unit vector at angle `phi` to the parallel; the variation is a
/// central difference at [`VARIATION_DELTA`].
pub fn first_conjugate_by_variation(
    nav: &NavigationData,
    q: SurfacePoint,
    phi: f64,
    length: f64,
    step: f64,
) -> Result<Option<f64>> {
    let surface = nav
        .surface()
        .ok_or_else(|| Error::Domain("variation check needs a Riemannian base".into()))?;
    let shoot = |angle: f64| -> Result<GeodesicTrace> {
        let m = surface.m(q.r);
        let w = nav.wind.eval(q.r, q.theta);
        let y = [angle.sin() + w[0], angle.cos() / m + w[1]];
        let p = covector_for_velocity(nav, q, y)?;
        integrate_randers_geodesic(nav, q, p, length, step, MetricTag::F0)
    };
    let lo = shoot(phi - VARIATION_DELTA)?;
    let mid = shoot(phi)?;
    let hi = shoot(phi + VARIATION_DELTA)?;
    let n = lo.len().min(mid.len()).min(hi.len());

    // Skip the immediate start where the variation is identically small.
    let k_min = ((0.2 / step) as usize).clamp(2, n.saturating_sub(2));
    let det_at = |k: usize| -> f64 {
        let (_, a) = lo.samples[k];
        let (_, b) = hi.samples[k];
        let (_, c) = mid.samples[k];
        let x = [
            (b.r - a.r) / (2.0 * VARIATION_DELTA),
            (b.theta - a.theta) / (2.0 * VARIATION_DELTA),
        ];
        x[0] * c.dtheta - x[1] * c.dr
    };
    let mut prev = det_at(k_min);
    for k in (k_min + 1)..n {
        let cur = det_at(k);
        if prev > 0.0 && cur <= 0.0 {
            let (s0, _) = mid.samples[k - 1];
            let (s1, _) = mid.samples[k];
            let t = prev / (prev - cur);
            return Ok(Some(s0 + t * (s1 - s0)));
        }
        prev = cur;
    }
    Ok(None)
}

/// Applies the flow sample-wise: the image curve is
/// `s -> flow_s(trace(s))`, keeping `s` as the parameter.
///
/// For rotation generators the advance is exact; otherwise each sample is
/// advanced by RK4 and velocities are recovered by central differences of
/// neighboring image samples.
pub fn deform_trace_by_flow(trace: &GeodesicTrace, flow: &FlowMap) -> Result<GeodesicTrace> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut samples = Vec::with_capacity(trace.len());
    if let Some(mu) = flow.generator.rotation_rate() {
        for &(s, st) in &trace.samples {
            samples.push((
                s,
                GeodesicState {
                    r: st.r,
                    theta: st.theta + mu * s,
                    dr: st.dr,
                    dtheta: st.dtheta + mu,
                },
            ));
        }
    } else {
        let mut positions = Vec::with_capacity(trace.len());
        for &(s, st) in &trace.samples {
            // Keep theta unwrapped: advance from the raw chart point and
            // add back the whole turns the wrap removed.
            let p0 = SurfacePoint::new(st.r, st.theta);
            let turns = st.theta - p0.theta;
            let q = flow_advance(flow, p0, s)?;
            positions.push((s, q.r, q.theta + turns));
        }
        for i in 0..positions.len() {
            let (s, r, theta) = positions[i];
            let (il, ih) = (i.saturating_sub(1), (i + 1).min(positions.len() - 1));
            let ds = positions[ih].0 - positions[il].0;
            let (dr, dtheta) = if ds > 0.0 {
                (
                    (positions[ih].1 - positions[il].1) / ds,
                    (positions[ih].2 - positions[il].2) / ds,
                )
            } else {
                (0.0, 0.0)
            };
            samples.push((s, GeodesicState { r, theta, dr, dtheta }));
        }
    }
    Ok(GeodesicTrace {
        samples,
        metric_tag: trace.metric_tag,
        step: trace.step,
        hit_pole_guard: trace.hit_pole_guard,
        max_invariant_drift: trace.max_invariant_drift,
    })
}

/// Chart distance `sqrt(dr^2 + m^2 dtheta^2)` between two points, with the
/// angle difference wrapped and the warp taken at the mean radius.
fn chart_distance(surface: &Surface, a: (f64, f64), b: (f64, f64)) -> f64 {
    let dr = a.0 - b.0;
    let dt = wrap_angle_signed(a.1 - b.1);
    let m = surface.m(0.5 * (a.0 + b.0));
    (dr * dr + m * m * dt * dt).sqrt()
}

/// Max chart distance between two traces over their common arclength
/// range; samples of `t2` are linearly interpolated onto `t1`'s grid when
/// the grids differ.
pub fn trace_distance(surface: &Surface, t1: &GeodesicTrace, t2: &GeodesicTrace) -> Result<f64> {
    if t1.is_empty() || t2.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let s_max = t1.last_s().min(t2.last_s());
    let aligned = t1.len() == t2.len()
        && t1
            .samples
            .iter()
            .zip(&t2.samples)
            .all(|((s1, _), (s2, _))| (s1 - s2).abs() < 1e-12);
    let mut worst: f64 = 0.0;
    if aligned {
        for ((_, a), (_, b)) in t1.samples.iter().zip(&t2.samples) {
            worst = worst.max(chart_distance(surface, (a.r, a.theta), (b.r, b.theta)));
        }
    } else {
        let lerp_at = |t: &GeodesicTrace, s: f64| -> (f64, f64) {
            let idx = match t
                .samples
                .binary_search_by(|(si, _)| si.partial_cmp(&s).unwrap())
            {
                Ok(i) => return (t.samples[i].1.r, t.samples[i].1.theta),
                Err(i) => i.clamp(1, t.samples.len() - 1) - 1,
            };
            let (s0, a) = t.samples[idx];
            let (s1, b) = t.samples[idx + 1];
            let u = ((s - s0) / (s1 - s0)).clamp(0.0, 1.0);
            (a.r + u * (b.r - a.r), a.theta + u * (b.theta - a.theta))
        };
        for &(s, a) in t1.samples.iter().take_while(|(s, _)| *s <= s_max + 1e-12) {
            let b = lerp_at(t2, s.min(s_max));
            worst = worst.max(chart_distance(surface, (a.r, a.theta), b));
        }
    }
    Ok(worst)
}

/// Symmetric Hausdorff distance between two traces viewed as point sets,
/// with point-to-segment chart distances.
pub fn trace_hausdorff(surface: &Surface, t1: &GeodesicTrace, t2: &GeodesicTrace) -> Result<f64> {
    if t1.is_empty() || t2.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let directed = |from: &GeodesicTrace, to: &GeodesicTrace| -> f64 {
        let mut worst: f64 = 0.0;
        for &(_, a) in &from.samples {
            let m = surface.m(a.r);
            let m2 = m * m;
            let mut best = f64::INFINITY;
            for win in to.samples.windows(2) {
                let (_, p) = win[0];
                let (_, q) = win[1];
                // Shift the segment by whole turns to sit next to `a`.
                let shift = a.theta - p.theta - wrap_angle_signed(a.theta - p.theta);
                let (pt, qt) = (p.theta + shift, q.theta + shift);
                let e = [q.r - p.r, qt - pt];
                let d0 = [a.r - p.r, a.theta - pt];
                let denom = e[0] * e[0] + m2 * e[1] * e[1];
                let t = if denom > 0.0 {
                    ((d0[0] * e[0] + m2 * d0[1] * e[1]) / denom).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let dr = d0[0] - t * e[0];
                let dt = d0[1] - t * e[1];
                best = best.min((dr * dr + m2 * dt * dt).sqrt());
                if best == 0.0 {
                    break;
                }
            }
            worst = worst.max(best);
        }
        worst
    };
    Ok(directed(t1, t2).max(directed(t2, t1)))
}
