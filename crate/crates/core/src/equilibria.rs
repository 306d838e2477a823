//! Kinetic vector field, its Jacobian, the six-dimensional traveling-wave
//! system, eigenvalue counts and a fixed-step kinetic integrator.

use std::io::Write;

use nalgebra::{Complex, DMatrix, Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::model::{derive, Params};

/// Densities of the weak prey, the strong prey and the predator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KineticState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl KineticState {
    pub const fn new(u: f64, v: f64, w: f64) -> Self {
        KineticState { u, v, w }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.u, self.v, self.w]
    }

    pub fn from_array(x: [f64; 3]) -> Self {
        KineticState::new(x[0], x[1], x[2])
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, self.w)
    }

    /// Componentwise max-norm distance.
    pub fn max_dist(&self, other: &KineticState) -> f64 {
        (self.u - other.u)
            .abs()
            .max((self.v - other.v).abs())
            .max((self.w - other.w).abs())
    }

    fn axpy(self, h: f64, d: [f64; 3]) -> Self {
        KineticState::new(self.u + h * d[0], self.v + h * d[1], self.w + h * d[2])
    }
}

/// A point `(phi1, psi1, phi2, psi2, phi3, psi3)` of the first-order wave system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TWState {
    pub phi1: f64,
    pub psi1: f64,
    pub phi2: f64,
    pub psi2: f64,
    pub phi3: f64,
    pub psi3: f64,
}

impl TWState {
    /// Rest point of the wave system sitting at a kinetic state.
    pub fn at_rest(x: KineticState) -> Self {
        TWState {
            phi1: x.u,
            phi2: x.v,
            phi3: x.w,
            ..Default::default()
        }
    }

    pub fn to_vector(self) -> Vector6<f64> {
        Vector6::new(self.phi1, self.psi1, self.phi2, self.psi2, self.phi3, self.psi3)
    }

    pub fn from_vector(x: &Vector6<f64>) -> Self {
        TWState {
            phi1: x[0],
            psi1: x[1],
            phi2: x[2],
            psi2: x[3],
            phi3: x[4],
            psi3: x[5],
        }
    }
}

pub fn kinetic_rhs(x: &KineticState, p: &Params) -> [f64; 3] {
    let KineticState { u, v, w } = *x;
    [
        p.r1 * u * (1.0 - u - p.k * v - p.b1 * w),
        p.r2 * v * (1.0 - p.h * u - v - p.b2 * w),
        p.r3 * w * (-1.0 + p.a * u + p.a * v - w),
    ]
}

pub fn kinetic_jacobian(x: &KineticState, p: &Params) -> Matrix3<f64> {
    let KineticState { u, v, w } = *x;
    let Params {
        r1,
        r2,
        r3,
        h,
        k,
        a,
        b1,
        b2,
        ..
    } = *p;
    Matrix3::new(
        r1 * (1.0 - 2.0 * u - k * v - b1 * w),
        -r1 * k * u,
        -r1 * b1 * u,
        -r2 * h * v,
        r2 * (1.0 - h * u - 2.0 * v - b2 * w),
        -r2 * b2 * v,
        r3 * a * w,
        r3 * a * w,
        r3 * (-1.0 + a * u + a * v - 2.0 * w),
    )
}

/// Vector field `F` of the first-order wave system `Psi' = F(Psi)`.
pub fn tw_rhs(x: &TWState, p: &Params, s: f64) -> TWState {
    let f = kinetic_rhs(&KineticState::new(x.phi1, x.phi2, x.phi3), p);
    TWState {
        phi1: x.psi1,
        psi1: (s * x.psi1 - f[0]) / p.d1,
        phi2: x.psi2,
        psi2: (s * x.psi2 - f[1]) / p.d2,
        phi3: x.psi3,
        psi3: (s * x.psi3 - f[2]) / p.d3,
    }
}

pub fn tw_jacobian(x: &TWState, p: &Params, s: f64) -> Matrix6<f64> {
    let kj = kinetic_jacobian(&KineticState::new(x.phi1, x.phi2, x.phi3), p);
    let d = p.diffusivities();
    let mut m = Matrix6::zeros();
    for i in 0..3 {
        m[(2 * i, 2 * i + 1)] = 1.0;
        m[(2 * i + 1, 2 * i + 1)] = s / d[i];
        for j in 0..3 {
            m[(2 * i + 1, 2 * j)] = -kj[(i, j)] / d[i];
        }
    }
    m
}

/// Numbers of eigenvalues with negative, positive and near-zero real part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EigenCounts {
    pub neg: usize,
    pub pos: usize,
    pub zero: usize,
}

impl EigenCounts {
    pub fn as_tuple(&self) -> (usize, usize, usize) {
        (self.neg, self.pos, self.zero)
    }
}

pub const EIGEN_TOL: f64 = 1e-9;

pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if !m.is_square() || m.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenSolveFailure);
    }
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, 10_000)
        .ok_or(Error::EigenSolveFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn eigen_split(m: &DMatrix<f64>, tol: f64) -> Result<EigenCounts> {
    let mut c = EigenCounts {
        neg: 0,
        pos: 0,
        zero: 0,
    };
    for ev in eigenvalues(m)? {
        if ev.re < -tol {
            c.neg += 1;
        } else if ev.re > tol {
            c.pos += 1;
        } else {
            c.zero += 1;
        }
    }
    Ok(c)
}

pub fn eigen_split_tw(x: &TWState, p: &Params, s: f64) -> Result<EigenCounts> {
    let j = tw_jacobian(x, p, s);
    eigen_split(&DMatrix::from_iterator(6, 6, j.iter().copied()), EIGEN_TOL)
}

pub fn eigen_split_kinetic(x: &KineticState, p: &Params) -> Result<EigenCounts> {
    let j = kinetic_jacobian(x, p);
    eigen_split(&DMatrix::from_iterator(3, 3, j.iter().copied()), EIGEN_TOL)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub ec: KineticState,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub routh_hurwitz_stable: bool,
    pub ec_eigenvalues: Vec<Complex<f64>>,
    /// Kinetic eigen counts at each boundary equilibrium and at `E_c`.
    pub eigen_counts: Vec<(&'static str, KineticState, EigenCounts)>,
}

impl StabilityReport {
    pub fn ec_counts(&self) -> EigenCounts {
        self.eigen_counts
            .iter()
            .find(|(name, _, _)| *name == "Ec")
            .map(|(_, _, c)| *c)
            .expect("Ec is always listed")
    }

    /// Verdict from the eigenvalues alone: every real part below `-tol`.
    pub fn eigen_stable(&self) -> bool {
        let c = self.ec_counts();
        c.pos == 0 && c.zero == 0
    }
}

/// Routh-Hurwitz coefficients of the characteristic polynomial
/// `l^3 + a2 l^2 + a1 l + a0` at `E_c`, and eigenvalue counts at every
/// equilibrium of the kinetic system.
pub fn classify_ec(p: &Params) -> Result<StabilityReport> {
    let dq = derive(p)?;
    let ec = dq.require_ec()?;
    let Params {
        r1,
        r2,
        r3,
        h,
        k,
        a,
        b1,
        b2,
        ..
    } = *p;
    let (uc, vc, wc) = (ec.u, ec.v, ec.w);
    let a2 = r1 * uc + r2 * vc + r3 * wc;
    let a1 = r1 * r2 * uc * vc * (1.0 - h * k)
        + r1 * r3 * uc * wc * (1.0 + a * b1)
        + r2 * r3 * vc * wc * (1.0 + a * b2);
    let a0 = r1 * r2 * r3 * uc * vc * wc * dq.delta;
    let routh_hurwitz_stable = a2 > 0.0 && a0 > 0.0 && a2 * a1 > a0;

    let j = kinetic_jacobian(&ec, p);
    let ec_eigenvalues = eigenvalues(&DMatrix::from_iterator(3, 3, j.iter().copied()))?;

    let points = [
        ("origin", KineticState::new(0.0, 0.0, 0.0)),
        ("u=1", KineticState::new(1.0, 0.0, 0.0)),
        ("v=1", KineticState::new(0.0, 1.0, 0.0)),
        ("E*", dq.e_upper()),
        ("E_*", dq.e_lower()),
        ("Ec", ec),
    ];
    let mut eigen_counts = Vec::with_capacity(points.len());
    for (name, x) in points {
        eigen_counts.push((name, x, eigen_split_kinetic(&x, p)?));
    }

    Ok(StabilityReport {
        ec,
        a0,
        a1,
        a2,
        routh_hurwitz_stable,
        ec_eigenvalues,
        eigen_counts,
    })
}

/// Sampled kinetic trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<KineticState>,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, KineticState)> {
        Some((*self.t.last()?, *self.x.last()?))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,u,v,w")?;
        for (t, x) in self.t.iter().zip(&self.x) {
            writeln!(out, "{:.15e},{:.15e},{:.15e},{:.15e}", t, x.u, x.v, x.w)?;
        }
        Ok(())
    }
}

pub fn default_kinetic_dt(p: &Params) -> f64 {
    0.01 / p.max_rate()
}

/// One classical Runge-Kutta step of the kinetic system.
pub fn rk4_kinetic_step(x: &KineticState, p: &Params, dt: f64) -> KineticState {
    let k1 = kinetic_rhs(x, p);
    let k2 = kinetic_rhs(&x.axpy(0.5 * dt, k1), p);
    let k3 = kinetic_rhs(&x.axpy(0.5 * dt, k2), p);
    let k4 = kinetic_rhs(&x.axpy(dt, k3), p);
    let mut d = [0.0; 3];
    for i in 0..3 {
        d[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    x.axpy(dt, d)
}

/// Integrate the kinetic system to `t_end`, recording every step.
pub fn integrate_kinetic(
    x0: KineticState,
    p: &Params,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_kinetic_with(x0, p, t_end, dt, 0.0, |_, _| Ok(()))
}

/// Integrate the kinetic system to `t_end` with fixed steps `dt` (the last
/// one shortened to land on `t_end`). States are recorded every
/// `sample_every` time units (every step when zero) and at the end;
/// `observe` sees every accepted state.
pub fn integrate_kinetic_with<F>(
    x0: KineticState,
    p: &Params,
    t_end: f64,
    dt: f64,
    sample_every: f64,
    mut observe: F,
) -> Result<Trajectory>
where
    F: FnMut(f64, &KineticState) -> Result<()>,
{
    p.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Domain(format!("t_end must be nonnegative, got {t_end}")));
    }
    check_state(0.0, &x0)?;
    let n_steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let stride = if sample_every > 0.0 {
        ((sample_every / dt).round() as usize).max(1)
    } else {
        1
    };

    let mut traj = Trajectory::default();
    traj.t.push(0.0);
    traj.x.push(x0);
    observe(0.0, &x0)?;

    let mut x = x0;
    for i in 1..=n_steps {
        let t_prev = (i - 1) as f64 * dt;
        let h = dt.min(t_end - t_prev);
        x = rk4_kinetic_step(&x, p, h);
        let t = if i == n_steps { t_end } else { i as f64 * dt };
        check_state(t, &x)?;
        observe(t, &x)?;
        if i % stride == 0 || i == n_steps {
            traj.t.push(t);
            traj.x.push(x);
        }
    }
    Ok(traj)
}

fn check_state(t: f64, x: &KineticState) -> Result<()> {
    for (name, value) in [("u", x.u), ("v", x.v), ("w", x.w)] {
        if !value.is_finite() {
            return Err(Error::StepSize {
                t,
                detail: format!("{name} is not finite"),
            });
        }
        if value < -1e-10 {
            return Err(Error::StepSize {
                t,
                detail: format!("{name} = {value:e} is negative"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn rhs_examples() {
        let p = presets::ps_a();
        assert_eq!(kinetic_rhs(&KineticState::default(), &p), [0.0, 0.0, 0.0]);
        let dq = derive(&p).unwrap();
        let f = kinetic_rhs(&dq.e_upper(), &p);
        assert!(f.iter().all(|x| x.abs() < 1e-15));
        let f = kinetic_rhs(&KineticState::new(1.0, 1.0, 1.0), &p);
        assert!((f[0] - 0.1 * (1.0 - 1.0 - 1.5 - 1.0)).abs() < 1e-15);
        assert!((f[1] - (1.0 - 0.5 - 1.0 - 0.02)).abs() < 1e-15);
        assert!((f[2] - 0.5 * (-1.0 + 3.0 + 3.0 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn jacobian_at_origin_is_diagonal() {
        let p = presets::ps_b();
        let j = kinetic_jacobian(&KineticState::default(), &p);
        assert_eq!(j, Matrix3::from_diagonal(&Vector3::new(p.r1, p.r2, -p.r3)));
    }

    #[test]
    fn tw_jacobian_block_structure_at_origin() {
        let p = presets::ps_a();
        let s = 2.0;
        let j = tw_jacobian(&TWState::default(), &p, s);
        let d = p.diffusivities();
        let r = p.rates();
        let sign = [-1.0, -1.0, 1.0];
        for i in 0..3 {
            assert_eq!(j[(2 * i, 2 * i + 1)], 1.0);
            assert_eq!(j[(2 * i + 1, 2 * i)], sign[i] * r[i] / d[i]);
            assert_eq!(j[(2 * i + 1, 2 * i + 1)], s / d[i]);
        }
        assert_eq!(eigen_split_tw(&TWState::default(), &p, s).unwrap().as_tuple(), (1, 5, 0));
    }

    #[test]
    fn identity_counts() {
        let m = DMatrix::<f64>::identity(6, 6);
        assert_eq!(eigen_split(&m, EIGEN_TOL).unwrap().as_tuple(), (0, 6, 0));
    }

    #[test]
    fn non_finite_matrix_is_rejected() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(eigen_split(&m, EIGEN_TOL), Err(Error::EigenSolveFailure)));
    }

    #[test]
    fn ps_b_is_routh_hurwitz_stable() {
        let rep = classify_ec(&presets::ps_b()).unwrap();
        assert!(rep.a0 > 0.0 && rep.a2 * rep.a1 > rep.a0);
        assert!(rep.routh_hurwitz_stable);
        assert!(rep.eigen_stable());
        assert_eq!(rep.ec_counts().as_tuple(), (3, 0, 0));
    }

    #[test]
    fn classify_without_ec() {
        assert!(matches!(
            classify_ec(&presets::ps_a()),
            Err(Error::NoCoexistenceState)
        ));
    }

    #[test]
    fn fixed_point_stays_put() {
        let p = presets::ps_b();
        let ec = derive(&p).unwrap().ec.unwrap();
        let traj = integrate_kinetic_with(ec, &p, 100.0, default_kinetic_dt(&p), 1.0, |_, _| Ok(())).unwrap();
        for x in &traj.x {
            assert!(x.max_dist(&ec) < 1e-10);
        }
    }

    #[test]
    fn final_time_is_exact() {
        let p = presets::ps_a();
        let traj = integrate_kinetic(KineticState::new(0.3, 0.2, 0.1), &p, 1.005, 0.01).unwrap();
        assert_eq!(traj.last().unwrap().0, 1.005);
        assert_eq!(traj.t.len(), 102);
    }

    #[test]
    fn negative_start_is_rejected() {
        let p = presets::ps_a();
        let r = integrate_kinetic(KineticState::new(-0.1, 0.2, 0.1), &p, 1.0, 0.01);
        assert!(matches!(r, Err(Error::StepSize { .. })));
    }

    #[test]
    fn huge_step_blows_up_as_error() {
        let p = presets::ps_a();
        let r = integrate_kinetic(KineticState::new(0.9, 0.9, 4.0), &p, 100.0, 5.0);
        assert!(matches!(r, Err(Error::StepSize { .. })));
    }

    #[test]
    fn csv_has_header_and_precision() {
        let p = presets::ps_a();
        let traj = integrate_kinetic(KineticState::new(0.3, 0.2, 0.1), &p, 0.02, 0.01).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,u,v,w"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 4);
        assert!(row[1].starts_with("3.000000000000000e-1"));
    }
}
