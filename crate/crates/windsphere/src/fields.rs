//! Chart vector fields, their flows, and symmetry diagnostics.
//!
//! Fields come from a small named catalog (rotations and radial profiles)
//! plus sums and custom closures; built-ins carry exact analytic partials.
//! The diagnostics certify the two symmetry notions the constructions
//! depend on: the Killing defect (Lie derivative of the base metric) and
//! the Poisson bracket of the co-metric Hamiltonian with the field's
//! momentum function. A field with vanishing defect generates a flow of
//! isometries.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metrics::{hamiltonian_eval, Covector, NavigationData};
use crate::surface::{wrap_angle, Surface, SurfacePoint, POLE_GUARD};

/// Central finite-difference step for first derivatives.
pub const FD_STEP: f64 = 1e-5;

pub type Field2Fn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// User-supplied field components and their first partials.
#[derive(Clone)]
pub struct CustomField {
    pub v_r: Field2Fn,
    pub v_theta: Field2Fn,
    pub dr_v_r: Field2Fn,
    pub dtheta_v_r: Field2Fn,
    pub dr_v_theta: Field2Fn,
    pub dtheta_v_theta: Field2Fn,
    pub label: String,
}

#[derive(Clone)]
enum FieldKind {
    /// `mu * d/dtheta`.
    Rotation { mu: f64 },
    /// `A(r) d/dr` with `A(r) = r/sqrt(r^2+1)`.
    RadialRatio,
    /// `A(r) d/dr` with `A(r) = c*sin(r)`.
    RadialSin { c: f64 },
    /// `c * d/dr`.
    RadialConst { c: f64 },
    /// Pointwise sum; the empty sum is the zero field.
    Sum(Vec<VectorFieldSpec>),
    Custom(Arc<CustomField>),
}

/// A chart vector field with component and partial evaluators.
#[derive(Clone)]
pub struct VectorFieldSpec {
    kind: FieldKind,
}

impl fmt::Debug for VectorFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorFieldSpec({})", self.id())
    }
}

impl VectorFieldSpec {
    pub fn zero() -> Self {
        VectorFieldSpec {
            kind: FieldKind::Sum(Vec::new()),
        }
    }

    pub fn rotation(mu: f64) -> Self {
        VectorFieldSpec {
            kind: FieldKind::Rotation { mu },
        }
    }

    pub fn radial_ratio() -> Self {
        VectorFieldSpec {
            kind: FieldKind::RadialRatio,
        }
    }

    pub fn radial_sin(c: f64) -> Self {
        VectorFieldSpec {
            kind: FieldKind::RadialSin { c },
        }
    }

    pub fn radial_const(c: f64) -> Self {
        VectorFieldSpec {
            kind: FieldKind::RadialConst { c },
        }
    }

    pub fn sum(parts: Vec<VectorFieldSpec>) -> Self {
        VectorFieldSpec {
            kind: FieldKind::Sum(parts),
        }
    }

    pub fn custom(field: CustomField) -> Self {
        VectorFieldSpec {
            kind: FieldKind::Custom(Arc::new(field)),
        }
    }

    /// Catalog identifier, parseable by [`parse_wind`].
    pub fn id(&self) -> String {
        match &self.kind {
            FieldKind::Rotation { mu } => format!("rotation:{mu}"),
            FieldKind::RadialRatio => "radial:ratio".into(),
            FieldKind::RadialSin { c } => format!("radial:sin:{c}"),
            FieldKind::RadialConst { c } => format!("radial:const:{c}"),
            FieldKind::Sum(parts) => {
                let ids: Vec<String> = parts.iter().map(|p| p.id()).collect();
                format!("sum:[{}]", ids.join(","))
            }
            FieldKind::Custom(c) => format!("custom:{}", c.label),
        }
    }

    /// `Some(mu)` when the field is exactly a rotation (possibly summed).
    pub fn rotation_rate(&self) -> Option<f64> {
        match &self.kind {
            FieldKind::Rotation { mu } => Some(*mu),
            FieldKind::Sum(parts) => {
                let mut mu = 0.0;
                for p in parts {
                    mu += p.rotation_rate()?;
                }
                Some(mu)
            }
            _ => None,
        }
    }

    /// Contravariant components `(v^r, v^theta)` at `(r, theta)`.
    pub fn eval(&self, r: f64, theta: f64) -> [f64; 2] {
        match &self.kind {
            FieldKind::Rotation { mu } => [0.0, *mu],
            FieldKind::RadialRatio => [r / (r * r + 1.0).sqrt(), 0.0],
            FieldKind::RadialSin { c } => [c * r.sin(), 0.0],
            FieldKind::RadialConst { c } => [*c, 0.0],
            FieldKind::Sum(parts) => {
                let mut v = [0.0, 0.0];
                for p in parts {
                    let pv = p.eval(r, theta);
                    v[0] += pv[0];
                    v[1] += pv[1];
                }
                v
            }
            FieldKind::Custom(c) => [(c.v_r)(r, theta), (c.v_theta)(r, theta)],
        }
    }

    /// `(d v^r/dr, d v^theta/dr)` at `(r, theta)`.
    pub fn partial_r(&self, r: f64, theta: f64) -> [f64; 2] {
        match &self.kind {
            FieldKind::Rotation { .. } => [0.0, 0.0],
            FieldKind::RadialRatio => {
                let d = (r * r + 1.0).sqrt();
                [1.0 / (d * d * d), 0.0]
            }
            FieldKind::RadialSin { c } => [c * r.cos(), 0.0],
            FieldKind::RadialConst { .. } => [0.0, 0.0],
            FieldKind::Sum(parts) => {
                let mut v = [0.0, 0.0];
                for p in parts {
                    let pv = p.partial_r(r, theta);
                    v[0] += pv[0];
                    v[1] += pv[1];
                }
                v
            }
            FieldKind::Custom(c) => [(c.dr_v_r)(r, theta), (c.dr_v_theta)(r, theta)],
        }
    }

    /// `(d v^r/dtheta, d v^theta/dtheta)` at `(r, theta)`.
    pub fn partial_theta(&self, r: f64, theta: f64) -> [f64; 2] {
        match &self.kind {
            FieldKind::Rotation { .. }
            | FieldKind::RadialRatio
            | FieldKind::RadialSin { .. }
            | FieldKind::RadialConst { .. } => [0.0, 0.0],
            FieldKind::Sum(parts) => {
                let mut v = [0.0, 0.0];
                for p in parts {
                    let pv = p.partial_theta(r, theta);
                    v[0] += pv[0];
                    v[1] += pv[1];
                }
                v
            }
            FieldKind::Custom(c) => [(c.dtheta_v_r)(r, theta), (c.dtheta_v_theta)(r, theta)],
        }
    }
}

/// Parses a catalog id: `rotation:<mu>`, `radial:ratio`, `radial:sin:<c>`,
/// `radial:const:<c>`, `sum:[id,id,...]` (no nested sums).
pub fn parse_wind(id: &str) -> Result<VectorFieldSpec> {
    let bad = |msg: &str| Error::InvalidParameter(format!("wind id `{id}`: {msg}"));
    if let Some(rest) = id.strip_prefix("rotation:") {
        let mu: f64 = rest.parse().map_err(|_| bad("rotation rate is not a number"))?;
        return Ok(VectorFieldSpec::rotation(mu));
    }
    if id == "radial:ratio" {
        return Ok(VectorFieldSpec::radial_ratio());
    }
    if let Some(rest) = id.strip_prefix("radial:sin:") {
        let c: f64 = rest.parse().map_err(|_| bad("sin coefficient is not a number"))?;
        return Ok(VectorFieldSpec::radial_sin(c));
    }
    if let Some(rest) = id.strip_prefix("radial:const:") {
        let c: f64 = rest.parse().map_err(|_| bad("constant is not a number"))?;
        return Ok(VectorFieldSpec::radial_const(c));
    }
    if let Some(rest) = id.strip_prefix("sum:") {
        let inner = rest
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| bad("sum needs a [..] list"))?;
        let mut parts = Vec::new();
        if !inner.trim().is_empty() {
            for piece in inner.split(',') {
                let piece = piece.trim();
                if piece.starts_with("sum:") {
                    return Err(bad("nested sums are not supported"));
                }
                parts.push(parse_wind(piece)?);
            }
        }
        return Ok(VectorFieldSpec::sum(parts));
    }
    Err(bad("unknown catalog id"))
}

type FormFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// A one-form with component and partial evaluators.
#[derive(Clone)]
pub struct OneForm {
    eval: FormFn,
    partial_r: FormFn,
    partial_theta: FormFn,
}

impl OneForm {
    /// Builds a one-form whose partials are central differences at
    /// [`FD_STEP`].
    pub fn new(eval: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        let e: FormFn = Arc::new(eval);
        let er = e.clone();
        let et = e.clone();
        OneForm {
            eval: e,
            partial_r: Arc::new(move |r, t| {
                let hi = er(r + FD_STEP, t);
                let lo = er(r - FD_STEP, t);
                [
                    (hi[0] - lo[0]) / (2.0 * FD_STEP),
                    (hi[1] - lo[1]) / (2.0 * FD_STEP),
                ]
            }),
            partial_theta: Arc::new(move |r, t| {
                let hi = et(r, t + FD_STEP);
                let lo = et(r, t - FD_STEP);
                [
                    (hi[0] - lo[0]) / (2.0 * FD_STEP),
                    (hi[1] - lo[1]) / (2.0 * FD_STEP),
                ]
            }),
        }
    }

    pub fn with_partials(
        eval: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
        partial_r: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
        partial_theta: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        OneForm {
            eval: Arc::new(eval),
            partial_r: Arc::new(partial_r),
            partial_theta: Arc::new(partial_theta),
        }
    }

    pub fn constant(c_r: f64, c_theta: f64) -> Self {
        OneForm::with_partials(
            move |_, _| [c_r, c_theta],
            |_, _| [0.0, 0.0],
            |_, _| [0.0, 0.0],
        )
    }

    /// Components `(omega_r, omega_theta)`.
    pub fn components(&self, r: f64, theta: f64) -> [f64; 2] {
        (self.eval)(r, theta)
    }

    pub fn d_r(&self, r: f64, theta: f64) -> [f64; 2] {
        (self.partial_r)(r, theta)
    }

    pub fn d_theta(&self, r: f64, theta: f64) -> [f64; 2] {
        (self.partial_theta)(r, theta)
    }
}

/// A field together with integration parameters for its flow.
#[derive(Clone, Debug)]
pub struct FlowMap {
    pub generator: VectorFieldSpec,
    pub step: f64,
    pub method: &'static str,
}

impl FlowMap {
    pub fn new(generator: VectorFieldSpec) -> Self {
        FlowMap {
            generator,
            step: 1e-3,
            method: "rk4",
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

/// Advances `p` along the flow of the generator for time `t` (RK4).
///
/// Fails with `PoleCrossing` if the trajectory enters the guard band.
pub fn flow_advance(flow: &FlowMap, p: SurfacePoint, t: f64) -> Result<SurfacePoint> {
    if t == 0.0 {
        return Ok(p);
    }
    let n = (t.abs() / flow.step).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let mut r = p.r;
    let mut theta = p.theta;
    let rhs = |r: f64, theta: f64| flow.generator.eval(r, theta);
    for i in 0..n {
        let k1 = rhs(r, theta);
        let k2 = rhs(r + 0.5 * h * k1[0], theta + 0.5 * h * k1[1]);
        let k3 = rhs(r + 0.5 * h * k2[0], theta + 0.5 * h * k2[1]);
        let k4 = rhs(r + h * k3[0], theta + h * k3[1]);
        r += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        theta += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        if r < POLE_GUARD || r > PI - POLE_GUARD || !r.is_finite() {
            return Err(Error::PoleCrossing {
                t: (i + 1) as f64 * h,
                r,
            });
        }
    }
    Ok(SurfacePoint::new(r, wrap_angle(theta)))
}

/// Frobenius norm of the Lie derivative of the surface metric along `v`:
/// zero exactly when `v` is Killing at `p`.
///
/// Components in the warped chart:
/// `L_rr = 2 dv^r/dr`, `L_rt = m^2 dv^t/dr + dv^r/dt`,
/// `L_tt = 2 m m' v^r + 2 m^2 dv^t/dt`.
pub fn killing_defect(surface: &Surface, v: &VectorFieldSpec, p: SurfacePoint) -> Result<f64> {
    surface.guard_check(p.r)?;
    let m = surface.m(p.r);
    let dm = surface.dm(p.r);
    let vv = v.eval(p.r, p.theta);
    let vr = v.partial_r(p.r, p.theta);
    let vt = v.partial_theta(p.r, p.theta);
    let l_rr = 2.0 * vr[0];
    let l_rt = m * m * vr[1] + vt[0];
    let l_tt = 2.0 * m * dm * vv[0] + 2.0 * m * m * vt[1];
    Ok((l_rr * l_rr + 2.0 * l_rt * l_rt + l_tt * l_tt).sqrt())
}

/// `|{K, W*}|` at `(p, cov)`: the Poisson bracket of the navigation
/// Hamiltonian with the momentum function `W* = W^i p_i`, by central
/// differences at [`FD_STEP`]. Zero iff the flow of `W` preserves the
/// co-metric level sets near `(p, cov)`.
pub fn poisson_defect(
    nav: &NavigationData,
    w: &VectorFieldSpec,
    p: SurfacePoint,
    cov: Covector,
) -> Result<f64> {
    let k = |r: f64, theta: f64, c: Covector| -> Result<f64> {
        hamiltonian_eval(nav, SurfacePoint { r, theta }, c)
    };
    let wstar = |r: f64, theta: f64, c: Covector| -> f64 {
        let wv = w.eval(r, theta);
        wv[0] * c.b_r + wv[1] * c.b_theta
    };
    let d = FD_STEP;
    let (r, t) = (p.r, p.theta);

    // x-derivatives.
    let dk_dr = (k(r + d, t, cov)? - k(r - d, t, cov)?) / (2.0 * d);
    let dk_dt = (k(r, t + d, cov)? - k(r, t - d, cov)?) / (2.0 * d);
    let dw_dr = (wstar(r + d, t, cov) - wstar(r - d, t, cov)) / (2.0 * d);
    let dw_dt = (wstar(r, t + d, cov) - wstar(r, t - d, cov)) / (2.0 * d);

    // p-derivatives.
    let shift = |c: Covector, dr: f64, dt: f64| Covector {
        b_r: c.b_r + dr,
        b_theta: c.b_theta + dt,
    };
    let dk_dpr = (k(r, t, shift(cov, d, 0.0))? - k(r, t, shift(cov, -d, 0.0))?) / (2.0 * d);
    let dk_dpt = (k(r, t, shift(cov, 0.0, d))? - k(r, t, shift(cov, 0.0, -d))?) / (2.0 * d);
    let dw_dpr = (wstar(r, t, shift(cov, d, 0.0)) - wstar(r, t, shift(cov, -d, 0.0))) / (2.0 * d);
    let dw_dpt = (wstar(r, t, shift(cov, 0.0, d)) - wstar(r, t, shift(cov, 0.0, -d))) / (2.0 * d);

    Ok((dk_dr * dw_dpr + dk_dt * dw_dpt - dk_dpr * dw_dr - dk_dpt * dw_dt).abs())
}

/// Covariant data of the wind at a point: `(W_r, W_theta, lambda)` with
/// `W_i = h_ij W^j` and `lambda = 1 - ||W||_h^2`.
fn wind_lowered(surface: &Surface, w: &VectorFieldSpec, r: f64, theta: f64) -> (f64, f64, f64) {
    let m2 = surface.m(r) * surface.m(r);
    let wv = w.eval(r, theta);
    let w_r = wv[0];
    let w_t = m2 * wv[1];
    let lambda = 1.0 - (wv[0] * wv[0] + m2 * wv[1] * wv[1]);
    (w_r, w_t, lambda)
}

/// The one-form `beta = -W_i/lambda dx^i` of total navigation wind
/// `W_total`, evaluated at `p`.
pub fn one_form_from_navigation(
    surface: &Surface,
    w_total: &VectorFieldSpec,
    p: SurfacePoint,
) -> Result<Covector> {
    surface.guard_check(p.r)?;
    let (w_r, w_t, lambda) = wind_lowered(surface, w_total, p.r, p.theta);
    if lambda <= 0.0 {
        return Err(Error::NonConvex {
            what: "||W_total||_h",
            value: (1.0 - lambda).sqrt(),
        });
    }
    Ok(Covector {
        b_r: -w_r / lambda,
        b_theta: -w_t / lambda,
    })
}

/// The same `beta` as a [`OneForm`] field with analytic partials.
pub fn navigation_one_form(surface: &Surface, w_total: &VectorFieldSpec) -> OneForm {
    let s1 = surface.clone();
    let w1 = w_total.clone();
    let s2 = surface.clone();
    let w2 = w_total.clone();
    let s3 = surface.clone();
    let w3 = w_total.clone();
    OneForm::with_partials(
        move |r, t| {
            let (w_r, w_t, lambda) = wind_lowered(&s1, &w1, r, t);
            [-w_r / lambda, -w_t / lambda]
        },
        move |r, t| {
            let g = beta_gradient(&s2, &w2, r, t);
            [g.0[0], g.0[1]]
        },
        move |r, t| {
            let g = beta_gradient(&s3, &w3, r, t);
            [g.1[0], g.1[1]]
        },
    )
}

/// Analytic partials of `beta_i = -W_i/lambda`:
/// returns `([d_r beta_r, d_r beta_t], [d_t beta_r, d_t beta_t])`.
fn beta_gradient(
    surface: &Surface,
    w: &VectorFieldSpec,
    r: f64,
    theta: f64,
) -> ([f64; 2], [f64; 2]) {
    let m = surface.m(r);
    let dm = surface.dm(r);
    let m2 = m * m;
    let wv = w.eval(r, theta);
    let wr = w.partial_r(r, theta);
    let wt = w.partial_theta(r, theta);

    let cov_r = wv[0];
    let cov_t = m2 * wv[1];
    let lambda = 1.0 - (wv[0] * wv[0] + m2 * wv[1] * wv[1]);

    let dr_cov_r = wr[0];
    let dr_cov_t = 2.0 * m * dm * wv[1] + m2 * wr[1];
    let dt_cov_r = wt[0];
    let dt_cov_t = m2 * wt[1];

    let dr_lambda = -2.0 * wv[0] * wr[0] - 2.0 * m * dm * wv[1] * wv[1] - 2.0 * m2 * wv[1] * wr[1];
    let dt_lambda = -2.0 * wv[0] * wt[0] - 2.0 * m2 * wv[1] * wt[1];

    let l2 = lambda * lambda;
    (
        [
            -dr_cov_r / lambda + cov_r * dr_lambda / l2,
            -dr_cov_t / lambda + cov_t * dr_lambda / l2,
        ],
        [
            -dt_cov_r / lambda + cov_r * dt_lambda / l2,
            -dt_cov_t / lambda + cov_t * dt_lambda / l2,
        ],
    )
}

/// `|d omega|` at `p`: the single component `d_r omega_t - d_t omega_r`.
pub fn closedness_defect(omega: &OneForm, p: SurfacePoint) -> Result<f64> {
    if p.r < POLE_GUARD || p.r > PI - POLE_GUARD {
        return Err(Error::PoleGuard {
            r: p.r,
            guard: POLE_GUARD,
        });
    }
    let dr = omega.d_r(p.r, p.theta);
    let dt = omega.d_theta(p.r, p.theta);
    Ok((dr[1] - dt[0]).abs())
}

/// The `(r,theta)` component of `d(W#) - dlog(lambda) ^ W#` for total wind
/// `W_total`, with `W# = W_i dx^i` and `lambda = 1 - ||W||_h^2`.
///
/// Vanishes exactly when the induced `beta = -W#/lambda` is closed, since
/// `dbeta = -(1/lambda) [dW# - dlog(lambda) ^ W#]`.
pub fn wind_closedness_residual(
    surface: &Surface,
    w_total: &VectorFieldSpec,
    p: SurfacePoint,
) -> Result<f64> {
    surface.guard_check(p.r)?;
    let m = surface.m(p.r);
    let dm = surface.dm(p.r);
    let m2 = m * m;
    let wv = w_total.eval(p.r, p.theta);
    let wr = w_total.partial_r(p.r, p.theta);
    let wt = w_total.partial_theta(p.r, p.theta);

    let cov_r = wv[0];
    let cov_t = m2 * wv[1];
    let lambda = 1.0 - (wv[0] * wv[0] + m2 * wv[1] * wv[1]);
    if lambda <= 0.0 {
        return Err(Error::NonConvex {
            what: "||W_total||_h",
            value: (1.0 - lambda).sqrt(),
        });
    }

    let dr_cov_t = 2.0 * m * dm * wv[1] + m2 * wr[1];
    let dt_cov_r = wt[0];
    let d_sharp = dr_cov_t - dt_cov_r;

    let dr_lambda = -2.0 * wv[0] * wr[0] - 2.0 * m * dm * wv[1] * wv[1] - 2.0 * m2 * wv[1] * wr[1];
    let dt_lambda = -2.0 * wv[0] * wt[0] - 2.0 * m2 * wv[1] * wt[1];
    let wedge = (dr_lambda / lambda) * cov_t - (dt_lambda / lambda) * cov_r;

    Ok(d_sharp - wedge)
}
