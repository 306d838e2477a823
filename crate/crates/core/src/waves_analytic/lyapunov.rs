use crate::equilibria::{default_kinetic_dt, integrate_kinetic_with, kinetic_rhs, KineticState};
use crate::error::{Error, Result};
use crate::model::{derive, Params};

fn g(x: f64) -> f64 {
    x - x.ln() - 1.0
}

fn weights(p: &Params) -> Result<(KineticState, [f64; 3])> {
    let ec = derive(p)?.require_ec()?;
    let c = [
        p.r3 * p.a * ec.u / (p.b1 * p.r1),
        p.r3 * p.a * ec.v / (p.b2 * p.r2),
        ec.w,
    ];
    Ok((ec, c))
}

fn check_positive(x: &KineticState) -> Result<()> {
    if x.u > 0.0 && x.v > 0.0 && x.w > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "Lyapunov function needs a positive state, got ({}, {}, {})",
            x.u, x.v, x.w
        )))
    }
}

/// `sum_i c_i g(x_i / x_c)` with `g(x) = x - ln x - 1`, weights chosen so that
/// the cross terms of the kinetic system cancel.
pub fn lyapunov_phi(x: &KineticState, p: &Params) -> Result<f64> {
    check_positive(x)?;
    let (ec, c) = weights(p)?;
    Ok(c[0] * g(x.u / ec.u) + c[1] * g(x.v / ec.v) + c[2] * g(x.w / ec.w))
}

/// Derivative of [`lyapunov_phi`] along the kinetic vector field.
pub fn lie_derivative_phi(x: &KineticState, p: &Params) -> Result<f64> {
    check_positive(x)?;
    let (ec, c) = weights(p)?;
    let f = kinetic_rhs(x, p);
    let grad = [
        c[0] * (1.0 - ec.u / x.u) / ec.u,
        c[1] * (1.0 - ec.v / x.v) / ec.v,
        c[2] * (1.0 - ec.w / x.w) / ec.w,
    ];
    Ok(grad[0] * f[0] + grad[1] * f[1] + grad[2] * f[2])
}

/// Lyapunov function along one kinetic trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovRun {
    pub start: KineticState,
    pub phi_start: f64,
    pub phi_end: f64,
    /// Largest increase of the function over one step (negative when it
    /// decreased at every step).
    pub max_increase: f64,
    pub terminal: KineticState,
    /// `max_i |x_i(t_end) - E_c,i|`.
    pub distance: f64,
}

/// Integrate from `x0` to `t_end` with the default step and follow the
/// Lyapunov function at every step.
pub fn lyapunov_run(x0: KineticState, p: &Params, t_end: f64) -> Result<LyapunovRun> {
    let (ec, _) = weights(p)?;
    let phi_start = lyapunov_phi(&x0, p)?;
    let mut prev = phi_start;
    let mut max_increase = f64::NEG_INFINITY;
    let tr = integrate_kinetic_with(x0, p, t_end, default_kinetic_dt(p), t_end, |_, x| {
        let phi = lyapunov_phi(x, p)?;
        max_increase = max_increase.max(phi - prev);
        prev = phi;
        Ok(())
    })?;
    let terminal = tr.last().map(|(_, x)| x).unwrap_or(x0);
    Ok(LyapunovRun {
        start: x0,
        phi_start,
        phi_end: prev,
        max_increase,
        terminal,
        distance: terminal.max_dist(&ec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn zero_at_ec() {
        let p = presets::ps_b();
        let ec = derive(&p).unwrap().ec.unwrap();
        assert!(lyapunov_phi(&ec, &p).unwrap().abs() < 1e-15);
        assert!(lie_derivative_phi(&ec, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn positive_elsewhere() {
        let p = presets::ps_b();
        let x = KineticState::new(1.0, 1.0, 1.0);
        assert!(lyapunov_phi(&x, &p).unwrap() > 0.0);
        assert!(lie_derivative_phi(&x, &p).unwrap() < 0.0);
    }

    #[test]
    fn rejects_boundary_states() {
        let p = presets::ps_b();
        let x = KineticState::new(0.0, 1.0, 1.0);
        assert!(matches!(lyapunov_phi(&x, &p), Err(Error::Domain(_))));
        assert!(matches!(
            lyapunov_phi(&KineticState::new(0.5, 0.5, 0.5), &presets::ps_a()),
            Err(Error::NoCoexistenceState)
        ));
    }

    #[test]
    fn trajectory_decreases() {
        let p = presets::ps_b();
        let r = lyapunov_run(KineticState::new(1.2, 0.1, 0.9), &p, 200.0).unwrap();
        assert!(r.max_increase <= 1e-12);
        assert!(r.phi_end < r.phi_start);
    }
}
