//! Randers metrics on two-spheres of revolution.
//!
//! The crate builds Finsler metrics of Randers type from Zermelo
//! navigation data (a warped-product metric `dr^2 + m^2(r) dtheta^2` plus
//! a wind field), integrates their geodesics through the cotangent
//! bundle, and locates conjugate and cut loci. The constructive chain is:
//!
//! - [`surface`]: profile functions `h`, warps `m(r) = a sin h(r)`, the
//!   symmetry/monotonicity/convexity conditions, Gauss curvature;
//! - [`metrics`]: navigation-to-Randers conversions, norms, the
//!   beta-change, and the navigation Hamiltonian;
//! - [`fields`]: wind fields, flows, Killing and closedness defects;
//! - [`geodesics`]: fixed-step integration (chart equations for the base
//!   metric, Hamilton's equations for Randers), Jacobi fields, trace
//!   comparisons;
//! - [`cutlocus`]: the half-period function, Maxwell-pair cut loci,
//!   conjugate loci, and the certified three-stage navigation chain;
//! - [`oracle`]: a brute-force distance-field oracle used to cross-check
//!   the constructive results.

pub mod cutlocus;
pub mod error;
pub mod fields;
pub mod geodesics;
pub mod metrics;
pub mod oracle;
pub mod surface;

pub use error::{Error, Result};
pub use surface::{
    check_profile_conditions, make_profile, ConditionReport, ProfileFamily, ProfileSpec, Surface,
    SurfacePoint, POLE_GUARD,
};

pub use fields::{
    closedness_defect, flow_advance, killing_defect, navigation_one_form, parse_wind,
    poisson_defect, wind_closedness_residual, CustomField, FlowMap, OneForm, VectorFieldSpec,
};

pub use metrics::{
    beta_change, hamiltonian_eval, randers_norm, randers_to_zermelo, riemann_eval,
    zermelo_to_randers, BaseMetric, Covector, MetricMatrix, NavigationData, RandersMetricData,
};

pub use geodesics::{
    clairaut_constant, covector_for_velocity, deform_trace_by_flow, first_conjugate_by_variation,
    first_conjugate_distance, integrate_cometric_geodesic, integrate_h_geodesic,
    integrate_randers_geodesic, jacobi_along, trace_distance, trace_hausdorff, GeodesicState,
    GeodesicTrace, JacobiSolution, MetricTag,
};

pub use cutlocus::{
    certify_chain, conjugate_locus, half_period, randers_cut_locus, riemann_cut_locus,
    scan_half_period, ChainCertificate, ConjugatePoint, CutKind, CutLocusResult, CutPoint,
    HalfPeriodTable, NavigationChain,
};

pub use oracle::{closest_approach, hausdorff, polyline_min_distance, OracleCut, ShootingOracle};
