//! Pointwise metric evaluation and navigation-data conversions.
//!
//! A Randers metric is `F = alpha + beta` with `alpha` a Riemannian norm
//! and `beta` a one-form with `||b||_alpha < 1`. Navigation data `(h, V)`
//! (metric plus wind, `||V||_h < 1`) induces a Randers metric whose unit
//! ball is the `h`-unit ball translated by `V`; the conversions both ways
//! and the wind-translation of an existing Randers metric live here, as
//! does the co-metric Hamiltonian used by the geodesic integrator.
//!
//! Conventions: chart components are ordered `(r, theta)`; `lambda`,
//! `epsilon`, `sigma`, `eta` are the convexity scalars `1 - ||.||^2` (or
//! the translation factor `eta`) of the respective data.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::VectorFieldSpec;
use crate::surface::{Surface, SurfacePoint};

/// Symmetric 2x2 metric components at a chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricMatrix {
    pub g_rr: f64,
    pub g_rtheta: f64,
    pub g_thetatheta: f64,
}

impl MetricMatrix {
    pub fn diagonal(g_rr: f64, g_thetatheta: f64) -> Self {
        MetricMatrix {
            g_rr,
            g_rtheta: 0.0,
            g_thetatheta,
        }
    }

    pub fn det(&self) -> f64 {
        self.g_rr * self.g_thetatheta - self.g_rtheta * self.g_rtheta
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g_rr > 0.0 && self.det() > 0.0
    }

    /// Matrix inverse; meaningful for positive definite input.
    pub fn inverse(&self) -> MetricMatrix {
        let d = self.det();
        MetricMatrix {
            g_rr: self.g_thetatheta / d,
            g_rtheta: -self.g_rtheta / d,
            g_thetatheta: self.g_rr / d,
        }
    }

    pub fn inner(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        self.g_rr * u[0] * v[0]
            + self.g_rtheta * (u[0] * v[1] + u[1] * v[0])
            + self.g_thetatheta * u[1] * v[1]
    }

    pub fn norm_sq(&self, y: [f64; 2]) -> f64 {
        self.inner(y, y)
    }

    /// Lowers a vector: `y_i = g_ij y^j`.
    pub fn lower(&self, y: [f64; 2]) -> Covector {
        Covector {
            b_r: self.g_rr * y[0] + self.g_rtheta * y[1],
            b_theta: self.g_rtheta * y[0] + self.g_thetatheta * y[1],
        }
    }

    /// Raises a covector: `y^i = g^ij y_j`.
    pub fn raise(&self, cov: Covector) -> [f64; 2] {
        let inv = self.inverse();
        [
            inv.g_rr * cov.b_r + inv.g_rtheta * cov.b_theta,
            inv.g_rtheta * cov.b_r + inv.g_thetatheta * cov.b_theta,
        ]
    }
}

/// Covector components at a chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covector {
    pub b_r: f64,
    pub b_theta: f64,
}

impl Covector {
    pub fn zero() -> Self {
        Covector {
            b_r: 0.0,
            b_theta: 0.0,
        }
    }

    /// Pairing with a vector: `b_i y^i`.
    pub fn apply(&self, y: [f64; 2]) -> f64 {
        self.b_r * y[0] + self.b_theta * y[1]
    }

    pub fn scaled(&self, t: f64) -> Covector {
        Covector {
            b_r: self.b_r * t,
            b_theta: self.b_theta * t,
        }
    }
}

type AlphaEval = Arc<dyn Fn(&SurfacePoint) -> Result<MetricMatrix> + Send + Sync>;
type BetaEval = Arc<dyn Fn(&SurfacePoint) -> Result<Covector> + Send + Sync>;

/// A Randers metric as a pair of pointwise evaluators.
#[derive(Clone)]
pub struct RandersMetricData {
    alpha_eval: AlphaEval,
    beta_eval: BetaEval,
}

impl RandersMetricData {
    pub fn new(
        alpha_eval: impl Fn(&SurfacePoint) -> Result<MetricMatrix> + Send + Sync + 'static,
        beta_eval: impl Fn(&SurfacePoint) -> Result<Covector> + Send + Sync + 'static,
    ) -> Self {
        RandersMetricData {
            alpha_eval: Arc::new(alpha_eval),
            beta_eval: Arc::new(beta_eval),
        }
    }

    /// The degenerate case `beta = 0`: the Riemannian metric itself.
    pub fn riemannian(surface: Surface) -> Self {
        RandersMetricData::new(
            move |p| riemann_eval(&surface, *p),
            |_| Ok(Covector::zero()),
        )
    }

    /// The Randers metric induced by navigation data `(h, wind)`.
    pub fn from_navigation(surface: Surface, wind: VectorFieldSpec) -> Self {
        let s2 = surface.clone();
        let w2 = wind.clone();
        RandersMetricData::new(
            move |p| zermelo_to_randers(&surface, &wind, *p).map(|(a, _)| a),
            move |p| zermelo_to_randers(&s2, &w2, *p).map(|(_, b)| b),
        )
    }

    pub fn alpha(&self, p: &SurfacePoint) -> Result<MetricMatrix> {
        (self.alpha_eval)(p)
    }

    pub fn beta(&self, p: &SurfacePoint) -> Result<Covector> {
        (self.beta_eval)(p)
    }

    /// `||b||_alpha = sqrt(a^ij b_i b_j)` at `p`.
    pub fn norm_b_alpha(&self, p: &SurfacePoint) -> Result<f64> {
        let a = self.alpha(p)?;
        let b = self.beta(p)?;
        Ok(b.apply(a.raise(b)).sqrt())
    }

    /// `epsilon = 1 - ||b||_alpha^2` at `p`; positive iff strongly convex.
    pub fn epsilon(&self, p: &SurfacePoint) -> Result<f64> {
        let a = self.alpha(p)?;
        let b = self.beta(p)?;
        Ok(1.0 - b.apply(a.raise(b)))
    }

    /// `F(y) = alpha(y) + beta(y)` at `p`.
    pub fn norm(&self, p: &SurfacePoint, y: [f64; 2]) -> Result<f64> {
        let a = self.alpha(p)?;
        let b = self.beta(p)?;
        Ok(randers_norm(&a, &b, y))
    }
}

/// Base metric of a navigation problem.
#[derive(Clone)]
pub enum BaseMetric {
    Riemann(Surface),
    Randers(RandersMetricData),
}

/// A base metric paired with a chart wind field.
#[derive(Clone)]
pub struct NavigationData {
    pub base: BaseMetric,
    pub wind: VectorFieldSpec,
}

impl NavigationData {
    pub fn riemannian(surface: Surface, wind: VectorFieldSpec) -> Self {
        NavigationData {
            base: BaseMetric::Riemann(surface),
            wind,
        }
    }

    pub fn randers(metric: RandersMetricData, wind: VectorFieldSpec) -> Self {
        NavigationData {
            base: BaseMetric::Randers(metric),
            wind,
        }
    }

    pub fn surface(&self) -> Option<&Surface> {
        match &self.base {
            BaseMetric::Riemann(s) => Some(s),
            BaseMetric::Randers(_) => None,
        }
    }

    /// `lambda = 1 - ||wind||_h^2`; defined for a Riemannian base.
    pub fn lambda(&self, p: &SurfacePoint) -> Result<f64> {
        match &self.base {
            BaseMetric::Riemann(s) => {
                let h = riemann_eval(s, *p)?;
                Ok(1.0 - h.norm_sq(self.wind.eval(p.r, p.theta)))
            }
            BaseMetric::Randers(_) => Err(Error::Domain(
                "lambda is defined for a Riemannian base".into(),
            )),
        }
    }

    /// Wind admissibility at `p`: `||V||_h < 1`, or `F(-W) < 1` for a
    /// Randers base.
    pub fn admissible(&self, p: &SurfacePoint) -> Result<bool> {
        let w = self.wind.eval(p.r, p.theta);
        match &self.base {
            BaseMetric::Riemann(s) => {
                let h = riemann_eval(s, *p)?;
                Ok(h.norm_sq(w) < 1.0)
            }
            BaseMetric::Randers(f) => Ok(f.norm(p, [-w[0], -w[1]])? < 1.0),
        }
    }
}

/// The warped-product metric `diag(1, m^2(r))` at `p`.
pub fn riemann_eval(surface: &Surface, p: SurfacePoint) -> Result<MetricMatrix> {
    surface.guard_check(p.r)?;
    let m = surface.m(p.r);
    Ok(MetricMatrix::diagonal(1.0, m * m))
}

/// Converts navigation data `(h, V)` to Randers components `(a, b)` at `p`:
/// `a_ij = h_ij/lambda + (V_i/lambda)(V_j/lambda)`, `b_i = -V_i/lambda`,
/// where `V_i = h_ij V^j` and `lambda = 1 - ||V||_h^2`.
pub fn zermelo_to_randers(
    surface: &Surface,
    v: &VectorFieldSpec,
    p: SurfacePoint,
) -> Result<(MetricMatrix, Covector)> {
    let h = riemann_eval(surface, p)?;
    let vv = v.eval(p.r, p.theta);
    let lambda = 1.0 - h.norm_sq(vv);
    if lambda <= 0.0 {
        return Err(Error::NonConvex {
            what: "||V||_h",
            value: h.norm_sq(vv).sqrt(),
        });
    }
    let vi = h.lower(vv);
    let a = MetricMatrix {
        g_rr: h.g_rr / lambda + (vi.b_r / lambda) * (vi.b_r / lambda),
        g_rtheta: h.g_rtheta / lambda + (vi.b_r / lambda) * (vi.b_theta / lambda),
        g_thetatheta: h.g_thetatheta / lambda + (vi.b_theta / lambda) * (vi.b_theta / lambda),
    };
    let b = vi.scaled(-1.0 / lambda);
    Ok((a, b))
}

/// Inverts a Randers metric back to navigation data:
/// `h_ij = epsilon (a_ij - b_i b_j)`, `V^i = -b^i/epsilon`,
/// with `b^i = a^ij b_j` and `epsilon = 1 - ||b||_alpha^2`.
pub fn randers_to_zermelo(a: &MetricMatrix, b: &Covector) -> Result<(MetricMatrix, [f64; 2])> {
    let b_up = a.raise(*b);
    let eps = 1.0 - b.apply(b_up);
    if eps <= 0.0 {
        return Err(Error::NonConvex {
            what: "||b||_alpha",
            value: b.apply(b_up).sqrt(),
        });
    }
    let h = MetricMatrix {
        g_rr: eps * (a.g_rr - b.b_r * b.b_r),
        g_rtheta: eps * (a.g_rtheta - b.b_r * b.b_theta),
        g_thetatheta: eps * (a.g_thetatheta - b.b_theta * b.b_theta),
    };
    Ok((h, [-b_up[0] / eps, -b_up[1] / eps]))
}

/// `F(y) = sqrt(a_ij y^i y^j) + b_i y^i`.
pub fn randers_norm(a: &MetricMatrix, b: &Covector, y: [f64; 2]) -> f64 {
    a.norm_sq(y).max(0.0).sqrt() + b.apply(y)
}

/// Translates the unit ball of `F = (a, b)` by the field `W` at `p`.
///
/// Returns the translated components and the scale
/// `eta = [1 + F(W)][1 - F(-W)]`; the new data is
/// `a~_ij = (a_ij - b_i b_j)/eta + (W~_i/eta)(W~_j/eta)`,
/// `b~_i = -W~_i/eta` with `W~_i = W_i - b_i [1 + beta(W)]`.
pub fn beta_change(
    f: &RandersMetricData,
    w: &VectorFieldSpec,
    p: SurfacePoint,
) -> Result<(MetricMatrix, Covector, f64)> {
    let a = f.alpha(&p)?;
    let b = f.beta(&p)?;
    let wv = w.eval(p.r, p.theta);
    let f_w = randers_norm(&a, &b, wv);
    let f_minus_w = randers_norm(&a, &b, [-wv[0], -wv[1]]);
    if f_minus_w >= 1.0 {
        return Err(Error::NonConvex {
            what: "F(-W)",
            value: f_minus_w,
        });
    }
    let eta = (1.0 + f_w) * (1.0 - f_minus_w);
    let wi = a.lower(wv);
    let shift = 1.0 + b.apply(wv);
    let wt = Covector {
        b_r: wi.b_r - b.b_r * shift,
        b_theta: wi.b_theta - b.b_theta * shift,
    };
    let at = MetricMatrix {
        g_rr: (a.g_rr - b.b_r * b.b_r) / eta + (wt.b_r / eta) * (wt.b_r / eta),
        g_rtheta: (a.g_rtheta - b.b_r * b.b_theta) / eta + (wt.b_r / eta) * (wt.b_theta / eta),
        g_thetatheta: (a.g_thetatheta - b.b_theta * b.b_theta) / eta
            + (wt.b_theta / eta) * (wt.b_theta / eta),
    };
    let bt = wt.scaled(-1.0 / eta);
    Ok((at, bt, eta))
}

/// Co-metric Hamiltonian of navigation data with Riemannian base:
/// `K~(p, cov) = sqrt(h^ij cov_i cov_j) + W^i cov_i` with
/// `h^ij = diag(1, 1/m^2)`.
pub fn hamiltonian_eval(nav: &NavigationData, p: SurfacePoint, cov: Covector) -> Result<f64> {
    let surface = nav.surface().ok_or_else(|| {
        Error::Domain("hamiltonian evaluation needs a Riemannian base; sum chained winds first".into())
    })?;
    surface.guard_check(p.r)?;
    let m = surface.m(p.r);
    let k = (cov.b_r * cov.b_r + (cov.b_theta / m) * (cov.b_theta / m)).sqrt();
    let w = nav.wind.eval(p.r, p.theta);
    Ok(k + w[0] * cov.b_r + w[1] * cov.b_theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::VectorFieldSpec;
    use crate::surface::ProfileSpec;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn round() -> Surface {
        Surface::new(ProfileSpec::round()).unwrap()
    }

    #[test]
    fn riemann_eval_anchors() {
        let s = round();
        let g = riemann_eval(&s, SurfacePoint::new(FRAC_PI_2, 0.0)).unwrap();
        assert!((g.g_rr - 1.0).abs() < 1e-15 && (g.g_thetatheta - 1.0).abs() < 1e-12);
        let g = riemann_eval(&s, SurfacePoint::new(FRAC_PI_6, 0.0)).unwrap();
        assert!((g.g_thetatheta - 0.25).abs() < 1e-12);
        assert!(riemann_eval(&s, SurfacePoint::new(1e-9, 0.0)).is_err());
    }

    #[test]
    fn zermelo_equator_anchor() {
        // V = (0, 1/2) at the round equator: lambda = 3/4, b_theta = -2/3,
        // a_thetatheta = 16/9.
        let s = round();
        let v = VectorFieldSpec::rotation(0.5);
        let p = SurfacePoint::new(FRAC_PI_2, 0.0);
        let (a, b) = zermelo_to_randers(&s, &v, p).unwrap();
        assert!((b.b_theta + 2.0 / 3.0).abs() < 1e-12);
        assert!((a.g_thetatheta - 16.0 / 9.0).abs() < 1e-12);
        assert!((a.g_rr - 4.0 / 3.0).abs() < 1e-12);
        assert!(a.g_rtheta.abs() < 1e-15);

        // Inverse recovers (diag(1,1), (0, 1/2)).
        let (h, vv) = randers_to_zermelo(&a, &b).unwrap();
        assert!((h.g_rr - 1.0).abs() < 1e-12 && (h.g_thetatheta - 1.0).abs() < 1e-12);
        assert!(vv[0].abs() < 1e-12 && (vv[1] - 0.5).abs() < 1e-12);

        // epsilon of the forward image equals lambda.
        let b_up = a.raise(b);
        let eps = 1.0 - b.apply(b_up);
        assert!((eps - 0.75).abs() < 1e-12);
    }

    #[test]
    fn zermelo_rejects_supersonic_wind() {
        let s = round();
        let v = VectorFieldSpec::rotation(1.1);
        let p = SurfacePoint::new(FRAC_PI_2, 0.0);
        assert!(matches!(
            zermelo_to_randers(&s, &v, p),
            Err(Error::NonConvex { .. })
        ));
    }

    #[test]
    fn randers_norm_anchors() {
        let id = MetricMatrix::diagonal(1.0, 1.0);
        let zero = Covector::zero();
        assert!((randers_norm(&id, &zero, [3.0, 4.0]) - 5.0).abs() < 1e-15);

        // F(y) + F(-y) = 2 alpha(y): the one-form is odd.
        let b = Covector {
            b_r: 0.3,
            b_theta: -0.2,
        };
        let y = [0.7, -1.1];
        let sum = randers_norm(&id, &b, y) + randers_norm(&id, &b, [-y[0], -y[1]]);
        assert!((sum - 2.0 * id.norm_sq(y).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn beta_change_by_zero_wind_is_identity() {
        let s = round();
        let f = RandersMetricData::from_navigation(s, VectorFieldSpec::rotation(0.4));
        let p = SurfacePoint::new(1.1, 0.3);
        let a0 = f.alpha(&p).unwrap();
        let b0 = f.beta(&p).unwrap();
        let (a, b, eta) = beta_change(&f, &VectorFieldSpec::zero(), p).unwrap();
        assert!((eta - 1.0).abs() < 1e-14);
        assert!((a.g_rr - a0.g_rr).abs() < 1e-12);
        assert!((a.g_thetatheta - a0.g_thetatheta).abs() < 1e-12);
        assert!((b.b_r - b0.b_r).abs() < 1e-12);
        assert!((b.b_theta - b0.b_theta).abs() < 1e-12);
    }

    #[test]
    fn beta_change_matches_summed_navigation() {
        // Translating F = zermelo(h, V) by W must equal zermelo(h, V + W).
        let s = round();
        let v = VectorFieldSpec::rotation(0.3);
        let w = VectorFieldSpec::sum(vec![
            VectorFieldSpec::radial_sin(0.4),
            VectorFieldSpec::rotation(-0.1),
        ]);
        let p = SurfacePoint::new(0.9, 1.2);
        let f = RandersMetricData::from_navigation(s.clone(), v.clone());
        let (a1, b1, eta) = beta_change(&f, &w, p).unwrap();
        let vw = VectorFieldSpec::sum(vec![v, w]);
        let (a2, b2) = zermelo_to_randers(&s, &vw, p).unwrap();
        assert!((a1.g_rr - a2.g_rr).abs() < 1e-10);
        assert!((a1.g_rtheta - a2.g_rtheta).abs() < 1e-10);
        assert!((a1.g_thetatheta - a2.g_thetatheta).abs() < 1e-10);
        assert!((b1.b_r - b2.b_r).abs() < 1e-10);
        assert!((b1.b_theta - b2.b_theta).abs() < 1e-10);

        // sigma = epsilon * eta.
        let h = riemann_eval(&s, p).unwrap();
        let sigma = 1.0 - h.norm_sq(vw.eval(p.r, p.theta));
        let eps = f.epsilon(&p).unwrap();
        assert!((sigma - eps * eta).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_anchors() {
        let s = round();
        let nav0 = NavigationData::riemannian(s.clone(), VectorFieldSpec::zero());
        let p = SurfacePoint::new(1.0, 0.0);
        let k = hamiltonian_eval(
            &nav0,
            p,
            Covector {
                b_r: 1.0,
                b_theta: 0.0,
            },
        )
        .unwrap();
        assert!((k - 1.0).abs() < 1e-15);

        let nav = NavigationData::riemannian(s, VectorFieldSpec::rotation(0.5));
        let k = hamiltonian_eval(
            &nav,
            SurfacePoint::new(FRAC_PI_2, 0.0),
            Covector {
                b_r: 0.0,
                b_theta: 1.0,
            },
        )
        .unwrap();
        assert!((k - 1.5).abs() < 1e-12);

        // Positive 1-homogeneity in the covector.
        let cov = Covector {
            b_r: 0.4,
            b_theta: -0.9,
        };
        let nav2 = NavigationData::riemannian(round(), VectorFieldSpec::rotation(0.2));
        let k1 = hamiltonian_eval(&nav2, p, cov).unwrap();
        let k3 = hamiltonian_eval(&nav2, p, cov.scaled(3.0)).unwrap();
        assert!((k3 - 3.0 * k1).abs() < 1e-12);
    }
}
