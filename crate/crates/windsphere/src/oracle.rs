//! Brute-force distance-field oracle.
//!
//! Independent of the constructive cut-locus pipeline: a dense fan of
//! unit-speed geodesics is shot from the source, first arrivals are
//! rasterized onto a chart grid, and the loss of minimality along any
//! direction is detected as the first arclength where a well-separated
//! direction has already arrived strictly earlier. Candidate competitors
//! from the raster are refined by golden-section search over the launch
//! angle, so detected cut points are limited by integration accuracy, not
//! by the raster resolution.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geodesics::{
    covector_for_velocity, integrate_randers_geodesic, GeodesicTrace, MetricTag,
};
use crate::metrics::NavigationData;
use crate::surface::{wrap_angle, wrap_angle_signed, Surface, SurfacePoint};

/// Raster resolution of the first-arrival grid (cells per axis).
const GRID_N: usize = 400;
/// Coarse-detection slack; must dominate the raster discretization error.
const COARSE_MARGIN: f64 = 0.1;
/// Fine-detection slack for the bisection predicate.
const FINE_MARGIN: f64 = 1e-5;
/// Launch angles closer than this are treated as the same direction
/// family and never count as competitors.
const ANGLE_WINDOW: f64 = 0.02;
/// A competitor only witnesses a cut if it arrives transversally; nearby
/// fan directions refocusing at a conjugate point arrive nearly parallel
/// and would otherwise fire the minimality test early.
const MIN_ARRIVAL_ANGLE: f64 = 0.04;

struct FirstArrivalGrid {
    best_s: Vec<f32>,
    dir_angle: Vec<f32>,
}

impl FirstArrivalGrid {
    fn new() -> Self {
        FirstArrivalGrid {
            best_s: vec![f32::INFINITY; GRID_N * GRID_N],
            dir_angle: vec![f32::NAN; GRID_N * GRID_N],
        }
    }

    fn cell(r: f64, theta: f64) -> usize {
        let i = ((r / PI) * GRID_N as f64) as usize;
        let j = ((wrap_angle(theta) / (2.0 * PI)) * GRID_N as f64) as usize;
        i.min(GRID_N - 1) * GRID_N + j.min(GRID_N - 1)
    }

    fn update(&mut self, r: f64, theta: f64, s: f64, angle: f64) {
        let c = Self::cell(r, theta);
        if (s as f32) < self.best_s[c] {
            self.best_s[c] = s as f32;
            self.dir_angle[c] = angle as f32;
        }
    }

    fn query(&self, r: f64, theta: f64) -> Option<(f64, f64)> {
        let c = Self::cell(r, theta);
        if self.best_s[c].is_finite() {
            Some((self.best_s[c] as f64, self.dir_angle[c] as f64))
        } else {
            None
        }
    }
}

/// A cut point located by the distance-field oracle.
#[derive(Debug, Clone)]
pub struct OracleCut {
    /// Launch angle of the probed direction.
    pub angle: f64,
    pub point: SurfacePoint,
    pub distance: f64,
    /// Launch angle of the refined competing minimizer.
    pub competitor_angle: f64,
}

/// Dense-fan distance oracle for one navigation metric and source point.
pub struct ShootingOracle {
    nav: NavigationData,
    source: SurfacePoint,
    step: f64,
    s_max: f64,
    tag: MetricTag,
    coarse_angles: Vec<f64>,
    grid: FirstArrivalGrid,
}

impl ShootingOracle {
    /// Shoots `n_coarse` directions up to arclength `s_max` and builds
    /// the first-arrival raster.
    pub fn new(
        nav: NavigationData,
        source: SurfacePoint,
        n_coarse: usize,
        step: f64,
        s_max: f64,
        tag: MetricTag,
    ) -> Result<Self> {
        if n_coarse < 64 {
            return Err(Error::InvalidParameter(format!(
                "oracle fan needs n_coarse >= 64, got {n_coarse}"
            )));
        }
        let mut oracle = ShootingOracle {
            nav,
            source,
            step,
            s_max,
            tag,
            coarse_angles: Vec::with_capacity(n_coarse),
            grid: FirstArrivalGrid::new(),
        };
        for k in 0..n_coarse {
            let angle = -PI + 2.0 * PI * ((k as f64) + 0.5) / (n_coarse as f64);
            let trace = oracle.shoot(angle, s_max)?;
            for (s, st) in &trace.samples {
                oracle.grid.update(st.r, st.theta, *s, angle);
            }
            oracle.coarse_angles.push(angle);
        }
        Ok(oracle)
    }

    pub fn source(&self) -> SurfacePoint {
        self.source
    }

    fn surface(&self) -> &Surface {
        self.nav.surface().expect("oracle requires a Riemannian base")
    }

    /// Unit-speed geodesic whose initial velocity is `u(angle) + W` with
    /// `u` the h-unit vector at `angle` to the parallel.
    pub fn shoot(&self, angle: f64, length: f64) -> Result<GeodesicTrace> {
        let surface = self.surface();
        let m = surface.m(self.source.r);
        let w = self.nav.wind.eval(self.source.r, self.source.theta);
        let y = [angle.sin() + w[0], angle.cos() / m + w[1]];
        let p = covector_for_velocity(&self.nav, self.source, y)?;
        integrate_randers_geodesic(&self.nav, self.source, p, length, self.step, self.tag)
    }

    /// Refines the arrival of the direction at `angle` near `x`:
    /// `(s at closest approach, chart residual)`.
    fn arrival_of(&self, angle: f64, x: SurfacePoint, length: f64) -> Result<(f64, f64)> {
        let trace = self.shoot(angle, length)?;
        Ok(closest_approach(self.surface(), &trace, x))
    }

    /// Like [`Self::arrival_of`] but also reports the chart velocity at
    /// the closest approach.
    fn arrival_with_direction(
        &self,
        angle: f64,
        x: SurfacePoint,
        length: f64,
    ) -> Result<(f64, f64, [f64; 2])> {
        let trace = self.shoot(angle, length)?;
        let (s_arr, resid) = closest_approach(self.surface(), &trace, x);
        let st = trace.state_at(s_arr);
        Ok((s_arr, resid, [st.dr, st.dtheta]))
    }

    /// Best arrival at `x` over directions at least `exclude_halfwidth`
    /// from `exclude_angle` in launch angle; golden-section refined.
    /// Returns `(arrival s, residual, competitor angle, arrival velocity)`.
    fn alternative_arrival(
        &self,
        x: SurfacePoint,
        s_budget: f64,
        exclude_angle: f64,
        exclude_halfwidth: f64,
        hint: Option<f64>,
    ) -> Result<Option<(f64, f64, f64, [f64; 2])>> {
        let spacing = 2.0 * PI / (self.coarse_angles.len() as f64);

        let mut candidates: Vec<f64> = Vec::new();
        if let Some(h) = hint {
            candidates.push(h);
        } else {
            // Rank coarse directions by raster arrival near x.
            if let Some((_, ang)) = self.grid.query(x.r, x.theta) {
                candidates.push(ang);
            }
            // Neighboring cells catch competitors whose polyline skirts
            // the cell boundary.
            for (dr, dt) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let r = x.r + (dr as f64) * PI / (GRID_N as f64);
                let t = x.theta + (dt as f64) * 2.0 * PI / (GRID_N as f64);
                if let Some((_, ang)) = self.grid.query(r.clamp(0.0, PI), t) {
                    candidates.push(ang);
                }
            }
        }
        // A negative halfwidth disables the exclusion entirely.
        candidates.retain(|a| {
            exclude_halfwidth < 0.0
                || wrap_angle_signed(a - exclude_angle).abs() > exclude_halfwidth
        });
        candidates.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        if candidates.is_empty() {
            return Ok(None);
        }

        let mut best: Option<(f64, f64, f64, [f64; 2])> = None;
        for cand in candidates.into_iter().take(3) {
            let halfwidth = if hint.is_some() { 2.5 * spacing } else { 1.5 * spacing };
            let (mut lo, mut hi) = (cand - halfwidth, cand + halfwidth);
            let objective = |ang: f64| -> Result<f64> {
                Ok(self.arrival_of(ang, x, s_budget)?.1)
            };
            // Golden-section on the chart residual of the closest
            // approach.
            let gr = 0.5 * (5.0f64.sqrt() - 1.0);
            let mut c = hi - gr * (hi - lo);
            let mut d = lo + gr * (hi - lo);
            let mut fc = objective(c)?;
            let mut fd = objective(d)?;
            for _ in 0..18 {
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - gr * (hi - lo);
                    fc = objective(c)?;
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + gr * (hi - lo);
                    fd = objective(d)?;
                }
            }
            let ang = if fc < fd { c } else { d };
            if exclude_halfwidth >= 0.0
                && wrap_angle_signed(ang - exclude_angle).abs() <= exclude_halfwidth
            {
                continue;
            }
            let (s_arr, resid, vel) = self.arrival_with_direction(ang, x, s_budget)?;
            if best.map_or(true, |(bs, br, _, _)| (s_arr, resid) < (bs, br)) {
                best = Some((s_arr, resid, ang, vel));
            }
        }
        Ok(best)
    }

    /// First loss of minimality along the direction at `angle`.
    ///
    /// Coarse detection walks the raster until a well-separated direction
    /// has arrived earlier by [`COARSE_MARGIN`]; the boundary is then
    /// bisected with freshly refined competitors. `None` when the
    /// direction stays minimizing over the whole shot.
    pub fn cut_along(&self, angle: f64) -> Result<Option<OracleCut>> {
        let trace = self.shoot(angle, self.s_max)?;
        let surface = self.surface().clone();

        // Coarse pass over the raster.
        let mut bracket_hi = None;
        for (s, st) in &trace.samples {
            if *s < 0.3 {
                continue;
            }
            if let Some((best_s, ang)) = self.grid.query(st.r, st.theta) {
                if best_s + COARSE_MARGIN < *s
                    && wrap_angle_signed(ang - angle).abs() > ANGLE_WINDOW
                {
                    bracket_hi = Some((*s, ang));
                    break;
                }
            }
        }
        let Some((mut hi, mut competitor)) = bracket_hi else {
            return Ok(None);
        };

        // Predicate: someone else reaches trace(s) strictly earlier AND
        // crosses it there. The angle gate is what separates genuine
        // competitors from refocusing neighbors near a conjugate point.
        let probe = |s: f64, competitor: &mut f64| -> Result<bool> {
            let x = trace.position_at(s);
            let own = trace.state_at(s);
            let own_vel = [own.dr, own.dtheta];
            // The probed trace's own earlier passage also competes
            // (a loop through x).
            if let Some((s_arr, resid)) = earlier_self_approach(&surface, &trace, x, s - 0.2) {
                let v = trace.state_at(s_arr);
                if resid < 5e-3
                    && s_arr + FINE_MARGIN < s
                    && arrival_angle(&surface, x, [v.dr, v.dtheta], own_vel) > MIN_ARRIVAL_ANGLE
                {
                    return Ok(true);
                }
            }
            // Try the locked competitor first; if it no longer witnesses
            // the cut, rescan the raster for a fresh candidate.
            for hint in [Some(*competitor), None] {
                let alt = self.alternative_arrival(x, s + 0.5, angle, ANGLE_WINDOW, hint)?;
                if let Some((s_arr, resid, ang, vel)) = alt {
                    if resid < 5e-3
                        && s_arr + FINE_MARGIN < s
                        && arrival_angle(&surface, x, vel, own_vel) > MIN_ARRIVAL_ANGLE
                    {
                        *competitor = ang;
                        return Ok(true);
                    }
                }
            }
            Ok(false)
        };

        let mut lo = (hi - 0.3).max(0.2);
        let mut tries = 0;
        while probe(lo, &mut competitor)? {
            hi = lo;
            lo = (lo - 0.4).max(0.05);
            tries += 1;
            if tries > 8 || lo <= 0.06 {
                break;
            }
        }
        for _ in 0..32 {
            let mid = 0.5 * (lo + hi);
            if probe(mid, &mut competitor)? {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-7 {
                break;
            }
        }
        let s_cut = 0.5 * (lo + hi);
        Ok(Some(OracleCut {
            angle,
            point: trace.position_at(s_cut),
            distance: s_cut,
            competitor_angle: competitor,
        }))
    }

    /// Measured distance from the source to `x`: `(arrival s, residual)`
    /// of the best refined direction.
    pub fn distance_to(&self, x: SurfacePoint) -> Result<Option<(f64, f64)>> {
        self.alternative_arrival(x, self.s_max, f64::NAN, -1.0, None)
            .map(|o| o.map(|(s, resid, _, _)| (s, resid)))
    }
}

/// Closest approach of a trace to `x`: `(s, chart distance)`, refined
/// parabolically between samples.
pub fn closest_approach(surface: &Surface, trace: &GeodesicTrace, x: SurfacePoint) -> (f64, f64) {
    let m = surface.m(x.r);
    let m2 = m * m;
    let d2 = |r: f64, theta: f64| {
        let dr = r - x.r;
        let dt = wrap_angle_signed(theta - x.theta);
        dr * dr + m2 * dt * dt
    };
    let mut best = (0usize, f64::INFINITY);
    for (i, (_, st)) in trace.samples.iter().enumerate() {
        let v = d2(st.r, st.theta);
        if v < best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    if i == 0 || i + 1 >= trace.len() {
        let (s, st) = trace.samples[i];
        return (s, d2(st.r, st.theta).sqrt());
    }
    // Parabolic refinement of d^2 over the three neighboring samples.
    let (s0, a) = trace.samples[i - 1];
    let (s1, _) = trace.samples[i];
    let (s2, c) = trace.samples[i + 1];
    let (f0, f1, f2) = (d2(a.r, a.theta), best.1, d2(c.r, c.theta));
    let denom = f0 - 2.0 * f1 + f2;
    let s_star = if denom.abs() > 1e-300 {
        let t = 0.5 * (f0 - f2) / denom;
        s1 + t.clamp(-1.0, 1.0) * 0.5 * (s2 - s0)
    } else {
        s1
    };
    let st = trace.state_at(s_star);
    (s_star, d2(st.r, st.theta).sqrt())
}

/// Unoriented h-angle at `x` between two chart velocities.
fn arrival_angle(surface: &Surface, x: SurfacePoint, u: [f64; 2], v: [f64; 2]) -> f64 {
    let m2 = surface.m(x.r).powi(2);
    let dot = u[0] * v[0] + m2 * u[1] * v[1];
    let nu = (u[0] * u[0] + m2 * u[1] * u[1]).sqrt();
    let nv = (v[0] * v[0] + m2 * v[1] * v[1]).sqrt();
    if nu <= 0.0 || nv <= 0.0 {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(-1.0, 1.0).acos()
}

/// Closest approach among samples with `s <= s_before`.
fn earlier_self_approach(
    surface: &Surface,
    trace: &GeodesicTrace,
    x: SurfacePoint,
    s_before: f64,
) -> Option<(f64, f64)> {
    let m = surface.m(x.r);
    let m2 = m * m;
    let mut best: Option<(f64, f64)> = None;
    for (s, st) in &trace.samples {
        if *s > s_before {
            break;
        }
        let dr = st.r - x.r;
        let dt = wrap_angle_signed(st.theta - x.theta);
        let d = (dr * dr + m2 * dt * dt).sqrt();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((*s, d));
        }
    }
    best
}

/// Chart distance from `x` to the polyline through `pts` (ordered).
pub fn polyline_min_distance(surface: &Surface, x: SurfacePoint, pts: &[SurfacePoint]) -> f64 {
    let m = surface.m(x.r);
    let m2 = m * m;
    if pts.is_empty() {
        return f64::INFINITY;
    }
    if pts.len() == 1 {
        let dr = x.r - pts[0].r;
        let dt = wrap_angle_signed(x.theta - pts[0].theta);
        return (dr * dr + m2 * dt * dt).sqrt();
    }
    let mut best = f64::INFINITY;
    for win in pts.windows(2) {
        let (p, q) = (win[0], win[1]);
        // Shift the segment by whole turns so it sits next to x.
        let pt = x.theta - wrap_angle_signed(x.theta - p.theta);
        let qt = pt + wrap_angle_signed(q.theta - p.theta);
        let e = [q.r - p.r, qt - pt];
        let d0 = [x.r - p.r, x.theta - pt];
        let denom = e[0] * e[0] + m2 * e[1] * e[1];
        let t = if denom > 0.0 {
            ((d0[0] * e[0] + m2 * d0[1] * e[1]) / denom).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let dr = d0[0] - t * e[0];
        let dt = d0[1] - t * e[1];
        best = best.min((dr * dr + m2 * dt * dt).sqrt());
    }
    best
}

/// Max over `from` of the chart distance to the polyline `to`.
pub fn directed_hausdorff(surface: &Surface, from: &[SurfacePoint], to: &[SurfacePoint]) -> f64 {
    from.iter()
        .map(|p| polyline_min_distance(surface, *p, to))
        .fold(0.0f64, f64::max)
}

/// Symmetric Hausdorff distance between two ordered point chains.
pub fn hausdorff(surface: &Surface, a: &[SurfacePoint], b: &[SurfacePoint]) -> f64 {
    directed_hausdorff(surface, a, b).max(directed_hausdorff(surface, b, a))
}
