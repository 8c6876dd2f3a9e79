//! Experiment runners: each builds its checks, writes its artifacts, and
//! leaves the report assembly to [`run`].

use std::f64::consts::PI;
use std::fs;

use windsphere::surface::{check_profile_conditions, closed_form_curvature};
use windsphere::{
    first_conjugate_distance, integrate_h_geodesic, integrate_randers_geodesic, riemann_eval,
    scan_half_period, clairaut_constant, covector_for_velocity, randers_cut_locus,
    riemann_cut_locus, CutLocusResult, GeodesicState, GeodesicTrace, MetricTag, NavigationChain,
    NavigationData, ProfileFamily, RandersMetricData, Surface, SurfacePoint, VectorFieldSpec,
};

use crate::config::{Experiment, Failure, Resolved};
use crate::report::{Check, Report};
use crate::suites;
use crate::svg::{self, Series, SphereCurve, SphereMarks};
use crate::trace_io::{self, FanRow};

/// Sphere-plot curves are decimated to at most this many vertices.
const SVG_CURVE_POINTS: usize = 200;
/// Curvature and geodesic drift bounds when the config does not override.
const CURVATURE_TOL: f64 = 1e-8;
const CLAIRAUT_TOL: f64 = 1e-8;
const UNIT_SPEED_TOL: f64 = 1e-6;
const PARALLEL_TOL: f64 = 1e-3;

/// Checks, advisory warnings, and artifact names produced by one runner.
#[derive(Default)]
struct Outcome {
    checks: Vec<Check>,
    warnings: Vec<String>,
    artifacts: Vec<String>,
}

/// Dispatches the experiment, writes `report.json` plus artifacts into
/// the output directory, and returns the report.
pub fn run(cfg: &Resolved) -> Result<Report, Failure> {
    fs::create_dir_all(&cfg.out)?;
    let outcome = match cfg.experiment {
        Experiment::Check => run_check(cfg)?,
        Experiment::Curvature => run_curvature(cfg)?,
        Experiment::Geodesic => run_geodesic(cfg)?,
        Experiment::Fan => run_fan(cfg)?,
        Experiment::CutLocus => run_cutlocus(cfg)?,
        Experiment::HalfPeriod => run_halfperiod(cfg)?,
        Experiment::VerifyLemmas => Outcome {
            checks: suites::run_all(cfg)?,
            ..Outcome::default()
        },
    };
    let report = Report::new(cfg, outcome.checks, outcome.warnings, outcome.artifacts);
    report.write(&cfg.out)?;
    Ok(report)
}

fn write_artifact(cfg: &Resolved, name: &str, body: &str, artifacts: &mut Vec<String>) -> Result<(), Failure> {
    fs::write(cfg.out.join(name), body)?;
    artifacts.push(name.to_string());
    Ok(())
}

fn total_wind(cfg: &Resolved) -> VectorFieldSpec {
    VectorFieldSpec::sum(cfg.winds.clone())
}

fn decimate(trace: &GeodesicTrace) -> Vec<SurfacePoint> {
    let n = trace.samples.len();
    let stride = (n / SVG_CURVE_POINTS).max(1);
    let mut pts: Vec<SurfacePoint> = trace
        .samples
        .iter()
        .step_by(stride)
        .map(|(_, st)| SurfacePoint::new(st.r, st.theta))
        .collect();
    if let Some((_, last)) = trace.samples.last() {
        pts.push(SurfacePoint::new(last.r, last.theta));
    }
    pts
}

fn run_check(cfg: &Resolved) -> Result<Outcome, Failure> {
    let grid = cfg.n_grid.unwrap_or(512);
    let c = check_profile_conditions(cfg.surface.profile(), grid);
    let mut checks = vec![
        Check::flag(
            "profile-symmetric(c1)",
            c.c1,
            usize::from(!c.c1),
            format!("worst defect {:.3e} at r={:.4}", c.worst_c1.1, c.worst_c1.0),
        ),
        Check::flag(
            "warp-monotone(c2)",
            c.c2,
            usize::from(!c.c2),
            format!("min h' {:.3e} at r={:.4}", c.worst_c2.1, c.worst_c2.0),
        ),
        Check::flag(
            "profile-convex(c3)",
            c.c3,
            usize::from(!c.c3),
            format!("min h'' {:.3e} at r={:.4}", c.worst_c3.1, c.worst_c3.0),
        ),
    ];
    if !cfg.winds.is_empty() {
        let wind = total_wind(cfg);
        let mut worst = 0.0f64;
        for i in 0..=200 {
            let r = 1e-3 + (PI - 2e-3) * (i as f64) / 200.0;
            let p = SurfacePoint::new(r, 0.0);
            let g = riemann_eval(&cfg.surface, p)?;
            worst = worst.max(g.norm_sq(wind.eval(p.r, p.theta)).sqrt());
        }
        checks.push(Check::bound(
            "wind-admissible",
            worst,
            1.0,
            "max ||total wind||_h over the meridian",
        ));
    }
    Ok(Outcome { checks, ..Outcome::default() })
}

fn run_curvature(cfg: &Resolved) -> Result<Outcome, Failure> {
    let n = cfg.n_grid.unwrap_or(1000);
    let tol = cfg.tolerance.unwrap_or(CURVATURE_TOL);
    let mut rows = Vec::with_capacity(n);
    let mut max_gap = 0.0f64;
    for i in 0..n {
        let r = 1e-3 + (PI - 2e-3) * (i as f64) / ((n - 1) as f64);
        let k = cfg.surface.gauss_curvature(r)?;
        let kc = closed_form_curvature(cfg.surface.profile(), r)?;
        max_gap = max_gap.max((k - kc).abs());
        rows.push((r, k, kc));
    }
    let checks = vec![Check::bound(
        "curvature-closed-form-gap",
        max_gap,
        tol,
        format!("max |K - closed form| over {n} radii"),
    )];

    let mut artifacts = Vec::new();
    write_artifact(cfg, "curvature.csv", &trace_io::curvature_csv(&rows), &mut artifacts)?;
    if cfg.svg {
        let series = vec![
            Series {
                label: "gauss".into(),
                points: rows.iter().map(|(r, k, _)| (*r, *k)).collect(),
            },
            Series {
                label: "closed form".into(),
                points: rows.iter().map(|(r, _, kc)| (*r, *kc)).collect(),
            },
        ];
        let title = format!("Gauss curvature, {}", cfg.profile_label);
        write_artifact(cfg, "curvature.svg", &svg::function_plot(&title, "r", "K", &series), &mut artifacts)?;
    }
    Ok(Outcome { checks, artifacts, ..Outcome::default() })
}

/// Initial covector for a wind-borne launch at `phi` to the parallel.
fn randers_launch(
    nav: &NavigationData,
    surface: &Surface,
    q: SurfacePoint,
    phi: f64,
) -> Result<windsphere::Covector, Failure> {
    let m = surface.m(q.r);
    let w = nav.wind.eval(q.r, q.theta);
    let y = [phi.sin() + w[0], phi.cos() / m + w[1]];
    Ok(covector_for_velocity(nav, q, y)?)
}

fn stage_tag(stages: usize) -> MetricTag {
    match stages {
        0 => MetricTag::H,
        1 => MetricTag::F0,
        2 => MetricTag::F1,
        _ => MetricTag::F2,
    }
}

fn run_geodesic(cfg: &Resolved) -> Result<Outcome, Failure> {
    let q = cfg.q;
    cfg.surface.guard_check(q.r)?;
    let (trace, checks) = if cfg.winds.is_empty() {
        let init = GeodesicState::from_angle(&cfg.surface, q.r, q.theta, cfg.phi)?;
        let trace = integrate_h_geodesic(&cfg.surface, &init, cfg.length, cfg.step)?;
        let nu0 = clairaut_constant(&cfg.surface, &trace.samples[0].1);
        let drift = trace
            .samples
            .iter()
            .map(|(_, st)| (clairaut_constant(&cfg.surface, st) - nu0).abs())
            .fold(0.0f64, f64::max);
        let check = Check::bound(
            "clairaut-drift",
            drift,
            cfg.tolerance.unwrap_or(CLAIRAUT_TOL),
            format!("length {}, step {}", cfg.length, cfg.step),
        );
        (trace, vec![check])
    } else {
        let wind = total_wind(cfg);
        let nav = NavigationData::riemannian(cfg.surface.clone(), wind.clone());
        let p0 = randers_launch(&nav, &cfg.surface, q, cfg.phi)?;
        let trace = integrate_randers_geodesic(
            &nav,
            q,
            p0,
            cfg.length,
            cfg.step,
            stage_tag(cfg.winds.len()),
        )?;
        let data = RandersMetricData::from_navigation(cfg.surface.clone(), wind);
        let mut drift = 0.0f64;
        for (_, st) in &trace.samples {
            let f = data.norm(&SurfacePoint::new(st.r, st.theta), [st.dr, st.dtheta])?;
            drift = drift.max((f - 1.0).abs());
        }
        let check = Check::bound(
            "unit-speed-drift",
            drift,
            cfg.tolerance.unwrap_or(UNIT_SPEED_TOL),
            format!("max |F(velocity) - 1| along {} samples", trace.samples.len()),
        );
        (trace, vec![check])
    };
    if trace.hit_pole_guard {
        let (s_end, last) = trace.samples.last().expect("non-empty trace");
        return Err(Failure::Numeric(format!(
            "geodesic entered the pole guard band after s = {s_end:.6} (last r = {:.6}); \
             shorten the length or change the launch angle",
            last.r
        )));
    }

    let mut artifacts = Vec::new();
    write_artifact(cfg, "geodesic.csv", &trace_io::geodesic_csv(&cfg.surface, &trace), &mut artifacts)?;
    if cfg.svg {
        let curves = vec![SphereCurve {
            label: format!("geodesic phi={}", cfg.phi),
            points: decimate(&trace),
        }];
        let marks = vec![SphereMarks {
            label: "source".into(),
            points: vec![q],
        }];
        let title = format!("Geodesic, {}", cfg.profile_label);
        write_artifact(
            cfg,
            "geodesic.svg",
            &svg::sphere_plot(&title, cfg.projection, &curves, &marks),
            &mut artifacts,
        )?;
    }
    Ok(Outcome { checks, artifacts, ..Outcome::default() })
}

fn run_fan(cfg: &Resolved) -> Result<Outcome, Failure> {
    let q = cfg.q;
    cfg.surface.guard_check(q.r)?;
    let riemannian = cfg.winds.is_empty();
    let wind = total_wind(cfg);
    let nav = NavigationData::riemannian(cfg.surface.clone(), wind.clone());
    let data = RandersMetricData::from_navigation(cfg.surface.clone(), wind);
    let tag = stage_tag(cfg.winds.len());

    let mut rows = Vec::with_capacity(cfg.fan_n);
    let mut curves = Vec::with_capacity(cfg.fan_n);
    let mut conj_marks = Vec::new();
    let mut drift = 0.0f64;
    for k in 0..cfg.fan_n {
        let angle = -PI + 2.0 * PI * ((k as f64) + 0.5) / (cfg.fan_n as f64);
        let trace = if riemannian {
            let init = GeodesicState::from_angle(&cfg.surface, q.r, q.theta, angle)?;
            integrate_h_geodesic(&cfg.surface, &init, cfg.length, cfg.step)?
        } else {
            let p0 = randers_launch(&nav, &cfg.surface, q, angle)?;
            integrate_randers_geodesic(&nav, q, p0, cfg.length, cfg.step, tag)?
        };
        if riemannian {
            let nu0 = clairaut_constant(&cfg.surface, &trace.samples[0].1);
            for (_, st) in &trace.samples {
                drift = drift.max((clairaut_constant(&cfg.surface, st) - nu0).abs());
            }
        } else {
            // Speed drift sampled sparsely: the fan is wide, the check
            // per-sample would dominate the runtime.
            for (_, st) in trace.samples.iter().step_by(16) {
                let f = data.norm(&SurfacePoint::new(st.r, st.theta), [st.dr, st.dtheta])?;
                drift = drift.max((f - 1.0).abs());
            }
        }
        let conjugate_s = if riemannian {
            first_conjugate_distance(&cfg.surface, &trace)?
        } else {
            None
        };
        if let Some(sc) = conjugate_s {
            conj_marks.push(trace.position_at(sc));
        }
        let (_, last) = trace.samples.last().expect("non-empty trace");
        rows.push(FanRow {
            angle,
            end_r: last.r,
            end_theta: last.theta,
            conjugate_s,
        });
        curves.push(SphereCurve {
            label: String::new(),
            points: decimate(&trace),
        });
    }

    let drift_check = if riemannian {
        Check::bound(
            "clairaut-drift-max",
            drift,
            cfg.tolerance.unwrap_or(CLAIRAUT_TOL),
            format!("{} directions, length {}", cfg.fan_n, cfg.length),
        )
    } else {
        Check::bound(
            "unit-speed-drift-max",
            drift,
            cfg.tolerance.unwrap_or(UNIT_SPEED_TOL),
            format!("{} directions, length {}", cfg.fan_n, cfg.length),
        )
    };
    let checks = vec![drift_check];

    let mut artifacts = Vec::new();
    write_artifact(cfg, "fan.csv", &trace_io::fan_csv(&rows), &mut artifacts)?;
    if cfg.svg {
        let mut marks = vec![SphereMarks { label: "source".into(), points: vec![q] }];
        if !conj_marks.is_empty() {
            marks.push(SphereMarks { label: "first conjugate".into(), points: conj_marks });
        }
        let title = format!("Geodesic fan, {}", cfg.profile_label);
        write_artifact(
            cfg,
            "fan.svg",
            &svg::sphere_plot(&title, cfg.projection, &curves, &marks),
            &mut artifacts,
        )?;
    }
    Ok(Outcome { checks, artifacts, ..Outcome::default() })
}

fn cutlocus_json(result: &CutLocusResult) -> String {
    let points: Vec<serde_json::Value> = result
        .cut_points
        .iter()
        .map(|c| {
            serde_json::json!({
                "r": c.point.r,
                "theta": c.point.theta,
                "distance": c.distance,
                "kind": c.kind.as_str(),
                "nu": c.nu,
            })
        })
        .collect();
    let body = serde_json::json!({
        "source": {"r": result.source.r, "theta": result.source.theta},
        "parallel_r": result.parallel_r,
        "max_parallel_deviation": result.max_parallel_deviation,
        "theta_extent": result.theta_extent.map(|(lo, hi)| vec![lo, hi]),
        "extent_endpoint_distance": result.extent_endpoint_distance,
        "warnings": result.warnings,
        "points": points,
    });
    let mut s = serde_json::to_string_pretty(&body).expect("cut locus serialization");
    s.push('\n');
    s
}

fn run_cutlocus(cfg: &Resolved) -> Result<Outcome, Failure> {
    let q = cfg.q;
    let result = if cfg.winds.is_empty() {
        riemann_cut_locus(&cfg.surface, q, cfg.fan_n, cfg.length_cap, cfg.step)?
    } else {
        let stage = |i: usize| cfg.winds.get(i).cloned().unwrap_or_else(VectorFieldSpec::zero);
        let chain = NavigationChain::new(cfg.surface.clone(), stage(0), stage(1), stage(2));
        randers_cut_locus(&chain, q, cfg.fan_n, cfg.length_cap, cfg.step)?
    };

    let checks = vec![
        Check::bound(
            "cut-on-parallel",
            result.max_parallel_deviation,
            cfg.tolerance.unwrap_or(PARALLEL_TOL),
            format!(
                "parallel r = {:.6}, {} cut points",
                result.parallel_r.unwrap_or(f64::NAN),
                result.cut_points.len()
            ),
        ),
        Check::flag(
            "theta-extent-found",
            result.theta_extent.is_some(),
            usize::from(result.theta_extent.is_none()),
            match result.theta_extent {
                Some((lo, hi)) => format!("extent [{lo:.6}, {hi:.6}]"),
                None => "no extent".into(),
            },
        ),
    ];

    let mut artifacts = Vec::new();
    write_artifact(cfg, "cutlocus.json", &cutlocus_json(&result), &mut artifacts)?;
    write_artifact(cfg, "cutlocus.csv", &trace_io::cutlocus_csv(&result), &mut artifacts)?;
    if cfg.svg {
        let marks = vec![
            SphereMarks {
                label: "cut locus".into(),
                points: result.cut_points.iter().map(|c| c.point).collect(),
            },
            SphereMarks { label: "source".into(), points: vec![q] },
        ];
        let title = format!("Cut locus, {}", cfg.profile_label);
        write_artifact(
            cfg,
            "cutlocus.svg",
            &svg::sphere_plot(&title, cfg.projection, &[], &marks),
            &mut artifacts,
        )?;
    }
    Ok(Outcome { checks, artifacts, warnings: result.warnings })
}

fn run_halfperiod(cfg: &Resolved) -> Result<Outcome, Failure> {
    let n = cfg.n_grid.unwrap_or(64);
    let table = scan_half_period(&cfg.surface, n)?;
    let mut checks = vec![
        Check::flag(
            "halfperiod-monotone",
            table.monotone,
            usize::from(!table.monotone),
            format!("{n} samples, quadrature tol {:.1e}", table.tol),
        ),
        Check::flag(
            "halfperiod-positive",
            table.phi_values.iter().all(|v| v.is_finite() && *v > 0.0),
            table.phi_values.iter().filter(|v| !(v.is_finite() && **v > 0.0)).count(),
            "all values finite and positive",
        ),
    ];
    if matches!(cfg.surface.profile().family(), ProfileFamily::RoundSphere) {
        let spread = table
            .phi_values
            .iter()
            .map(|v| (v - PI).abs())
            .fold(0.0f64, f64::max);
        checks.push(Check::bound(
            "round-halfperiod-constant",
            spread,
            cfg.tolerance.unwrap_or(1e-8),
            "half-period of the round sphere is pi for every direction",
        ));
    }

    let mut artifacts = Vec::new();
    write_artifact(cfg, "halfperiod.csv", &trace_io::halfperiod_csv(&table), &mut artifacts)?;
    if cfg.svg {
        let series = vec![Series {
            label: "phi(nu)".into(),
            points: table.nu_grid.iter().copied().zip(table.phi_values.iter().copied()).collect(),
        }];
        let title = format!("Half-period, {}", cfg.profile_label);
        write_artifact(
            cfg,
            "halfperiod.svg",
            &svg::function_plot(&title, "nu", "phi", &series),
            &mut artifacts,
        )?;
    }
    Ok(Outcome { checks, artifacts, ..Outcome::default() })
}
