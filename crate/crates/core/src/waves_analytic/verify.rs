use std::fmt::Write as _;
use std::io::Write;

use super::{eval_ul, ULConstruction};

/// Radius of the neighbourhood of each corner left out of the grid.
pub const CORNER_EXCLUSION: f64 = 1e-8;
/// Largest admissible distance to the invaded state at the left end.
pub const TAIL_TOL: f64 = 1e-6;
/// Largest admissible jump of a profile across its corner.
pub const CONTINUITY_TOL: f64 = 1e-9;

/// Sample points for [`verify_ul`], sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyGrid {
    pub points: Vec<f64>,
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (b - a) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if i + 1 == n { b } else { a + step * i as f64 })
}

impl VerifyGrid {
    pub fn uniform(z_min: f64, z_max: f64, n: usize) -> Self {
        VerifyGrid {
            points: linspace(z_min, z_max, n).collect(),
        }
    }

    /// `10^4` uniform points on `[leftmost corner - 50, rightmost corner + 20]`,
    /// plus dense windows of half-width 50 around every corner and
    /// logarithmically spaced points between the corners. The extra points
    /// matter when the leftmost corner is very far out.
    pub fn default_for(c: &ULConstruction) -> Self {
        let corners = c.corners();
        let zl = corners.first().copied().unwrap_or(0.0).min(0.0);
        let zr = corners.last().copied().unwrap_or(0.0).max(0.0);
        let (lo, hi) = (zl - 50.0, zr + 20.0);
        let mut pts: Vec<f64> = linspace(lo, hi, 10_000).collect();
        for &z in &corners {
            pts.extend(linspace((z - 50.0).max(lo), (z + 50.0).min(hi), 4_001));
        }
        let span = zr - lo;
        if span > 1.0 {
            let top = span.log10();
            pts.extend(linspace(0.0, top, 4_000).map(|e| zr - 10f64.powf(e)));
        }
        Self::from_points(pts)
    }

    pub fn from_points(mut pts: Vec<f64>) -> Self {
        pts.retain(|z| z.is_finite());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        VerifyGrid { points: pts }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One grid row of the verification table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyRow {
    pub z: f64,
    /// `U1, U2, U3, L1, L2, L3`.
    pub values: [f64; 6],
    pub order_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityWorst {
    pub name: &'static str,
    /// Largest `U_i` or smallest `L_i` over the grid.
    pub worst: f64,
    pub z: f64,
    pub pass: bool,
}

/// One-sided derivatives and values of one profile at its corner.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerCheck {
    pub profile: &'static str,
    pub z: f64,
    pub left_derivative: f64,
    pub right_derivative: f64,
    pub jump: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub tol: f64,
    pub inequalities: Vec<InequalityWorst>,
    pub order_margin: f64,
    pub order_z: f64,
    pub corners: Vec<CornerCheck>,
    pub tail_z: f64,
    pub tail_residual: f64,
    pub points_checked: usize,
    pub rows: Vec<VerifyRow>,
    pub pass: bool,
    pub notes: Vec<String>,
}

const NAMES: [&str; 6] = ["U1", "U2", "U3", "L1", "L2", "L3"];
const PROFILE_NAMES: [&str; 6] = ["upper1", "upper2", "upper3", "lower1", "lower2", "lower3"];

impl VerificationReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for q in &self.inequalities {
            let _ = writeln!(
                out,
                "{} {:.6e} {:.6} {}",
                q.name,
                q.worst,
                q.z,
                if q.pass { "ok" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            out,
            "order {:.6e} {:.6} {}",
            self.order_margin,
            self.order_z,
            if self.order_margin >= -self.tol { "ok" } else { "FAIL" }
        );
        for c in &self.corners {
            let _ = writeln!(
                out,
                "corner {} z={:.6} left={:.6e} right={:.6e} jump={:.3e} {}",
                c.profile,
                c.z,
                c.left_derivative,
                c.right_derivative,
                c.jump,
                if c.pass { "ok" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            out,
            "tail {:.6e} {:.6} {}",
            self.tail_residual,
            self.tail_z,
            if self.tail_residual <= TAIL_TOL { "ok" } else { "FAIL" }
        );
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        let _ = writeln!(
            out,
            "points {} {}",
            self.points_checked,
            if self.pass { "PASS" } else { "FAIL" }
        );
        out
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "z,U1,U2,U3,L1,L2,L3,order_margin")?;
        for r in &self.rows {
            write!(out, "{:.15e}", r.z)?;
            for v in r.values {
                write!(out, ",{v:.15e}")?;
            }
            writeln!(out, ",{:.15e}", r.order_margin)?;
        }
        Ok(())
    }

    pub fn worst(&self, name: &str) -> Option<&InequalityWorst> {
        self.inequalities.iter().find(|q| q.name == name)
    }
}

/// Evaluate the six differential inequalities, the ordering, the corner
/// conditions and the left-tail limit. Derivatives are exact per piece.
/// Inequalities pass when `U_i <= tol` and `L_i >= -tol`.
pub fn verify_ul(c: &ULConstruction, grid: &VerifyGrid, tol: f64) -> VerificationReport {
    let p = &c.params;
    let s = c.s;
    let d = p.diffusivities();
    let r = p.rates();
    let corners = c.corners();

    let mut rows = Vec::with_capacity(grid.len());
    for &z in &grid.points {
        if corners.iter().any(|cz| (z - cz).abs() <= CORNER_EXCLUSION) {
            continue;
        }
        let up = [0, 1, 2].map(|i| c.upper[i].jet(z));
        let lo = [0, 1, 2].map(|i| c.lower[i].jet(z));
        let (u, l) = (up.map(|j| j[0]), lo.map(|j| j[0]));
        let diff = |i: usize, j: &[f64; 3]| d[i] * j[2] - s * j[1];
        let values = [
            diff(0, &up[0]) + r[0] * u[0] * (1.0 - u[0] - p.k * l[1] - p.b1 * l[2]),
            diff(1, &up[1]) + r[1] * u[1] * (1.0 - p.h * l[0] - u[1] - p.b2 * l[2]),
            diff(2, &up[2]) + r[2] * u[2] * (-1.0 + p.a * u[0] + p.a * u[1] - u[2]),
            diff(0, &lo[0]) + r[0] * l[0] * (1.0 - l[0] - p.k * u[1] - p.b1 * u[2]),
            diff(1, &lo[1]) + r[1] * l[1] * (1.0 - p.h * u[0] - l[1] - p.b2 * u[2]),
            diff(2, &lo[2]) + r[2] * l[2] * (-1.0 + p.a * l[0] + p.a * l[1] - l[2]),
        ];
        let order_margin = (0..3).map(|i| u[i] - l[i]).fold(f64::INFINITY, f64::min);
        rows.push(VerifyRow {
            z,
            values,
            order_margin,
        });
    }

    let mut inequalities: Vec<InequalityWorst> = NAMES
        .iter()
        .enumerate()
        .map(|(i, &name)| InequalityWorst {
            name,
            worst: if i < 3 { f64::NEG_INFINITY } else { f64::INFINITY },
            z: f64::NAN,
            pass: true,
        })
        .collect();
    let mut order_margin = f64::INFINITY;
    let mut order_z = f64::NAN;
    for row in &rows {
        for (i, q) in inequalities.iter_mut().enumerate() {
            let v = row.values[i];
            let worse = v.is_nan() || if i < 3 { v > q.worst } else { v < q.worst };
            if worse && !q.worst.is_nan() {
                q.worst = v;
                q.z = row.z;
            }
        }
        if !order_margin.is_nan() && (row.order_margin.is_nan() || row.order_margin < order_margin) {
            order_margin = row.order_margin;
            order_z = row.z;
        }
    }
    for (i, q) in inequalities.iter_mut().enumerate() {
        q.pass = if i < 3 { q.worst <= tol } else { q.worst >= -tol };
    }

    let mut corner_checks = Vec::new();
    for (k, prof) in c.upper.iter().chain(&c.lower).enumerate() {
        if !prof.corner.is_finite() {
            continue;
        }
        let (dl, dr) = prof.corner_derivatives();
        let (vl, vr) = prof.corner_values();
        let jump = (vl - vr).abs();
        let deriv_ok = if k < 3 { dr <= dl + tol } else { dl <= dr + tol };
        corner_checks.push(CornerCheck {
            profile: PROFILE_NAMES[k],
            z: prof.corner,
            left_derivative: dl,
            right_derivative: dr,
            jump,
            pass: deriv_ok && jump <= CONTINUITY_TOL * vl.abs().max(1.0),
        });
    }

    let (tail_z, tail_residual) = match rows.first() {
        Some(row) => {
            let v = eval_ul(c, row.z);
            let t = c.tail_target().to_array();
            let res = (0..3)
                .map(|i| (v.upper[i] - t[i]).abs().max((v.lower[i] - t[i]).abs()))
                .fold(0.0, f64::max);
            (row.z, res)
        }
        None => (f64::NAN, f64::INFINITY),
    };

    let pass = !rows.is_empty()
        && inequalities.iter().all(|q| q.pass)
        && order_margin >= -tol
        && corner_checks.iter().all(|c| c.pass)
        && tail_residual <= TAIL_TOL;

    let notes = vec![
        "L2 uses the growth rate r2 of the second prey in its reaction term".to_string(),
    ];

    VerificationReport {
        tol,
        inequalities,
        order_margin,
        order_z,
        corners: corner_checks,
        tail_z,
        tail_residual,
        points_checked: rows.len(),
        rows,
        pass,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_ul, ULCase};
    use super::*;
    use crate::presets;

    #[test]
    fn ps_a_passes_on_uniform_grid() {
        let c = build_ul(&presets::ps_a(), 2.0, ULCase::EStarSuper).unwrap();
        let rep = verify_ul(&c, &VerifyGrid::uniform(-60.0, 20.0, 10_000), 1e-10);
        assert!(rep.pass, "{}", rep.summary());
        assert!(rep.points_checked >= 9_990);
    }

    #[test]
    fn zero_q_is_caught() {
        let c = build_ul(&presets::ps_a(), 2.0, ULCase::EStarSuper).unwrap();
        let bad = c.with_q(0.0);
        let rep = verify_ul(&bad, &VerifyGrid::uniform(-60.0, 20.0, 10_000), 1e-10);
        assert!(!rep.pass);
        assert!(rep.worst("L2").unwrap().worst < 0.0);
    }

    #[test]
    fn corner_neighbourhoods_are_skipped() {
        let c = build_ul(&presets::ps_a(), 2.0, ULCase::EStarSuper).unwrap();
        let grid = VerifyGrid::from_points(vec![-1.0, 0.0, 1e-9, 1.0]);
        let rep = verify_ul(&c, &grid, 1e-10);
        assert_eq!(rep.points_checked, 2);
    }

    #[test]
    fn csv_header() {
        let c = build_ul(&presets::ps_a(), 2.0, ULCase::EStarSuper).unwrap();
        let rep = verify_ul(&c, &VerifyGrid::uniform(-60.0, 20.0, 11), 1e-10);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("z,U1,U2,U3,L1,L2,L3,order_margin\n"));
        assert_eq!(text.lines().count(), 1 + rep.points_checked);
    }
}
