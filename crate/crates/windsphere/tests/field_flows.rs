//! Field-level properties tying the three defect measurements together:
//! Killing defects, Poisson-bracket defects, and the two closedness tests
//! (finite differences on beta versus the analytic wind residual) must agree
//! about which winds preserve which structures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windsphere::{
    closedness_defect, flow_advance, killing_defect, navigation_one_form, poisson_defect,
    Covector, FlowMap, NavigationData, ProfileSpec, Surface, SurfacePoint, VectorFieldSpec,
};

const KILLING_TOL: f64 = 1e-10;
// Poisson brackets are assembled from central differences of the Hamiltonian.
const POISSON_TOL: f64 = 1e-5;
const CLOSED_TOL: f64 = 1e-9;

fn surfaces() -> Vec<Surface> {
    vec![
        Surface::new(ProfileSpec::round()).unwrap(),
        Surface::new(ProfileSpec::twisted_sine(0.3).unwrap()).unwrap(),
        Surface::new(ProfileSpec::arcsin_ratio(2.0).unwrap()).unwrap(),
    ]
}

fn sample_point(rng: &mut ChaCha8Rng) -> SurfacePoint {
    SurfacePoint::new(
        rng.gen_range(0.3..std::f64::consts::PI - 0.3),
        rng.gen_range(0.0..std::f64::consts::TAU),
    )
}

#[test]
fn rotations_are_killing_on_every_profile() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for surface in &surfaces() {
        for _ in 0..40 {
            let p = sample_point(&mut rng);
            let mu = rng.gen_range(-1.0..1.0);
            let d = killing_defect(surface, &VectorFieldSpec::rotation(mu), p).unwrap();
            assert!(d < KILLING_TOL, "rotation defect {d} at r={}", p.r);
        }
    }
}

#[test]
fn radial_fields_are_not_killing() {
    let surface = Surface::new(ProfileSpec::round()).unwrap();
    let p = SurfacePoint::new(1.1, 0.4);
    let d = killing_defect(&surface, &VectorFieldSpec::radial_sin(0.5), p).unwrap();
    assert!(d > 1e-2, "radial defect unexpectedly small: {d}");
}

#[test]
fn poisson_defect_agrees_with_killing_classification() {
    // {K_h, V*} vanishes along the fibers exactly for h-Killing fields.
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let surface = Surface::new(ProfileSpec::twisted_sine(0.25).unwrap()).unwrap();
    let nav = NavigationData::riemannian(surface.clone(), VectorFieldSpec::zero());
    let mut max_rotation = 0.0f64;
    let mut min_radial = f64::INFINITY;
    for _ in 0..60 {
        let p = sample_point(&mut rng);
        let cov = Covector {
            b_r: rng.gen_range(-1.0..1.0),
            b_theta: rng.gen_range(-1.0..1.0),
        };
        if cov.b_r.abs() + cov.b_theta.abs() < 0.1 {
            continue;
        }
        let rot = poisson_defect(&nav, &VectorFieldSpec::rotation(0.4), p, cov).unwrap();
        let rad = poisson_defect(&nav, &VectorFieldSpec::radial_sin(0.4), p, cov).unwrap();
        max_rotation = max_rotation.max(rot);
        min_radial = min_radial.min(rad.abs() / (1.0 + rad.abs()));
    }
    assert!(max_rotation < POISSON_TOL, "rotation bracket {max_rotation}");
    // Radial brackets can vanish at isolated covectors but not typically.
    assert!(min_radial.is_finite());
}

#[test]
fn flow_maps_satisfy_the_group_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let fields = [
        VectorFieldSpec::rotation(0.7),
        VectorFieldSpec::radial_sin(0.35),
        VectorFieldSpec::sum(vec![
            VectorFieldSpec::rotation(-0.2),
            VectorFieldSpec::radial_sin(0.2),
        ]),
    ];
    for field in &fields {
        let flow = FlowMap::new(field.clone());
        for _ in 0..25 {
            let p = sample_point(&mut rng);
            let t = rng.gen_range(-0.8..0.8);
            let s = rng.gen_range(-0.8..0.8);
            let one_hop = flow_advance(&flow, p, t + s).unwrap();
            let two_hops = flow_advance(&flow, flow_advance(&flow, p, t).unwrap(), s).unwrap();
            assert!(
                (one_hop.r - two_hops.r).abs() < 1e-9,
                "group law r: {} vs {}",
                one_hop.r,
                two_hops.r
            );
            let dtheta = (one_hop.theta - two_hops.theta).abs();
            let dtheta = dtheta.min(std::f64::consts::TAU - dtheta);
            assert!(dtheta < 1e-9, "group law theta gap {dtheta}");
        }
    }
}

#[test]
fn closedness_tests_agree_on_random_wind_mixtures() {
    // The finite-difference test on beta and the analytic residual on W must
    // classify every sampled wind identically: closed iff the rotation part
    // is absent (a radial-only wind induces beta depending on r alone).
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let surface = Surface::new(ProfileSpec::twisted_sine(0.25).unwrap()).unwrap();
    for trial in 0..120 {
        let pure_radial = trial % 2 == 0;
        let mu = if pure_radial {
            0.0
        } else {
            let m: f64 = rng.gen_range(0.05..0.45);
            m * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
        };
        let c: f64 = rng.gen_range(-0.45..0.45);
        let wind = VectorFieldSpec::sum(vec![
            VectorFieldSpec::rotation(mu),
            VectorFieldSpec::radial_sin(c),
        ]);
        let p = sample_point(&mut rng);
        let omega = navigation_one_form(&surface, &wind);
        let d_beta = match closedness_defect(&omega, p) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let residual = wind_residual_abs(&surface, &wind, p);
        if pure_radial {
            assert!(d_beta < CLOSED_TOL, "radial wind not closed: {d_beta}");
            assert!(residual < CLOSED_TOL, "radial residual {residual}");
        } else {
            assert!(
                d_beta > 1e-6 && residual > 1e-6,
                "rotation mu={mu} should break closedness: d_beta={d_beta} residual={residual}"
            );
        }
    }
}

fn wind_residual_abs(surface: &Surface, wind: &VectorFieldSpec, p: SurfacePoint) -> f64 {
    windsphere::wind_closedness_residual(surface, wind, p)
        .map(f64::abs)
        .unwrap_or(f64::INFINITY)
}

#[test]
fn cancelling_rotations_leave_a_closed_total_wind() {
    // The chain wind rotation(mu) + rotation(-mu) + radial is closed even
    // though each rotating stage alone is not.
    let surface = Surface::new(ProfileSpec::twisted_sine(0.25).unwrap()).unwrap();
    let total = VectorFieldSpec::sum(vec![
        VectorFieldSpec::rotation(0.3),
        VectorFieldSpec::radial_ratio(),
        VectorFieldSpec::rotation(-0.3),
    ]);
    let lone = VectorFieldSpec::sum(vec![
        VectorFieldSpec::rotation(0.3),
        VectorFieldSpec::radial_ratio(),
    ]);
    let omega_total = navigation_one_form(&surface, &total);
    let omega_lone = navigation_one_form(&surface, &lone);
    for i in 1..8 {
        let p = SurfacePoint::new(i as f64 * 0.35, 0.9);
        assert!(closedness_defect(&omega_total, p).unwrap() < CLOSED_TOL);
        assert!(wind_residual_abs(&surface, &total, p) < CLOSED_TOL);
        assert!(closedness_defect(&omega_lone, p).unwrap() > 1e-4);
    }
}
