//! CSV artifacts. Values are written in scientific notation with twelve
//! significant digits so files are deterministic and diff-friendly.

use std::fmt::Write as _;

use windsphere::{clairaut_constant, CutLocusResult, GeodesicTrace, HalfPeriodTable, Surface};

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

/// One row per integration sample: `s,r,theta,dr,dtheta,nu` where `nu`
/// is the base-metric Clairaut function `m^2(r) dtheta` (conserved only
/// for base-metric geodesics; diagnostic otherwise).
pub fn geodesic_csv(surface: &Surface, trace: &GeodesicTrace) -> String {
    let mut out = String::from("s,r,theta,dr,dtheta,nu\n");
    for (s, st) in &trace.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(*s),
            num(st.r),
            num(st.theta),
            num(st.dr),
            num(st.dtheta),
            num(clairaut_constant(surface, st))
        );
    }
    out
}

/// Per-direction fan summary.
pub struct FanRow {
    pub angle: f64,
    pub end_r: f64,
    pub end_theta: f64,
    pub conjugate_s: Option<f64>,
}

pub fn fan_csv(rows: &[FanRow]) -> String {
    let mut out = String::from("angle,end_r,end_theta,conjugate_s\n");
    for row in rows {
        let conj = row.conjugate_s.map(num).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{conj}",
            num(row.angle),
            num(row.end_r),
            num(row.end_theta)
        );
    }
    out
}

pub fn cutlocus_csv(result: &CutLocusResult) -> String {
    let mut out = String::from("r,theta,distance,kind,nu\n");
    for c in &result.cut_points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(c.point.r),
            num(c.point.theta),
            num(c.distance),
            c.kind.as_str(),
            num(c.nu)
        );
    }
    out
}

pub fn halfperiod_csv(table: &HalfPeriodTable) -> String {
    let mut out = String::from("nu,phi\n");
    for (nu, phi) in table.nu_grid.iter().zip(&table.phi_values) {
        let _ = writeln!(out, "{},{}", num(*nu), num(*phi));
    }
    out
}

/// Rows of `(r, curvature, closed form)`.
pub fn curvature_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("r,gauss,closed_form,abs_gap\n");
    for (r, k, kc) in rows {
        let _ = writeln!(out, "{},{},{},{}", num(*r), num(*k), num(*kc), num((k - kc).abs()));
    }
    out
}
