//! Explicit upper/lower solution pairs for the wave equations, their
//! pointwise verification, the contracting-rectangle sign quantities and the
//! Lyapunov function of the kinetic system.

mod lyapunov;
mod rectangle;
mod verify;

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

pub use lyapunov::{lie_derivative_phi, lyapunov_phi, lyapunov_run, LyapunovRun};
pub use rectangle::{default_delta3, eps_max, rectangle_signs, RectangleCheck};
pub use verify::{
    verify_ul, CornerCheck, InequalityWorst, VerificationReport, VerifyGrid, VerifyRow,
    CORNER_EXCLUSION,
};

use crate::equilibria::KineticState;
use crate::error::{Error, Result};
use crate::model::{check_conditions, derive, speed_regime, DerivedQuantities, Params, SpeedRegime};

/// Which of the four constructions to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ULCase {
    /// Waves invading `E*` with `s > s*`.
    EStarSuper,
    /// Waves invading `E*` with `s = s*`.
    EStarCritical,
    /// Waves invading `E_*` with `s > s_*`.
    ELowSuper,
    /// Waves invading `E_*` with `s = s_*`.
    ELowCritical,
}

impl ULCase {
    pub const ALL: [ULCase; 4] = [
        ULCase::EStarSuper,
        ULCase::EStarCritical,
        ULCase::ELowSuper,
        ULCase::ELowCritical,
    ];

    pub fn is_critical(self) -> bool {
        matches!(self, ULCase::EStarCritical | ULCase::ELowCritical)
    }

    /// True when the invaded state is `E*` (the strong prey `v` is the alien).
    pub fn invades_estar(self) -> bool {
        matches!(self, ULCase::EStarSuper | ULCase::EStarCritical)
    }

    pub fn name(self) -> &'static str {
        match self {
            ULCase::EStarSuper => "estar-super",
            ULCase::EStarCritical => "estar-critical",
            ULCase::ELowSuper => "elow-super",
            ULCase::ELowCritical => "elow-critical",
        }
    }
}

impl fmt::Display for ULCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ULCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ULCase::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown case `{s}`")))
    }
}

/// Exponent of `(-z)` in a profile term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Power {
    Zero,
    Half,
    One,
}

impl Power {
    fn value(self) -> f64 {
        match self {
            Power::Zero => 0.0,
            Power::Half => 0.5,
            Power::One => 1.0,
        }
    }
}

/// `coef * (-z)^pow * exp(rate * z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub pow: Power,
    pub rate: f64,
}

impl Term {
    fn jet(&self, z: f64) -> [f64; 3] {
        let e = (self.rate * z).exp();
        let r = self.rate;
        match self.pow {
            Power::Zero => [self.coef * e, self.coef * r * e, self.coef * r * r * e],
            Power::One => {
                let y = -z;
                [
                    self.coef * y * e,
                    self.coef * (r * y - 1.0) * e,
                    self.coef * (r * r * y - 2.0 * r) * e,
                ]
            }
            _ => {
                let p = self.pow.value();
                let y = -z;
                let yp = y.powf(p);
                let yp1 = y.powf(p - 1.0);
                let yp2 = y.powf(p - 2.0);
                [
                    self.coef * yp * e,
                    self.coef * (r * yp - p * yp1) * e,
                    self.coef * (r * r * yp - 2.0 * p * r * yp1 + p * (p - 1.0) * yp2) * e,
                ]
            }
        }
    }
}

/// `base + sum of terms`, smooth on its interval.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Piece {
    pub base: f64,
    pub terms: Vec<Term>,
}

impl Piece {
    pub fn constant(base: f64) -> Self {
        Piece {
            base,
            terms: Vec::new(),
        }
    }

    fn with(base: f64, terms: &[(f64, Power, f64)]) -> Self {
        Piece {
            base,
            terms: terms
                .iter()
                .map(|&(coef, pow, rate)| Term { coef, pow, rate })
                .collect(),
        }
    }

    /// Value, first and second derivative.
    pub fn jet(&self, z: f64) -> [f64; 3] {
        let mut out = [self.base, 0.0, 0.0];
        for t in &self.terms {
            let j = t.jet(z);
            out[0] += j[0];
            out[1] += j[1];
            out[2] += j[2];
        }
        out
    }
}

/// A profile equal to `left` for `z < corner` and `right` for `z > corner`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub corner: f64,
    pub left: Piece,
    pub right: Piece,
}

impl Profile {
    pub fn jet(&self, z: f64) -> [f64; 3] {
        if z <= self.corner {
            self.left.jet(z)
        } else {
            self.right.jet(z)
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        self.jet(z)[0]
    }

    /// One-sided first derivatives `(left, right)` at the corner.
    pub fn corner_derivatives(&self) -> (f64, f64) {
        (self.left.jet(self.corner)[1], self.right.jet(self.corner)[1])
    }

    /// One-sided values `(left, right)` at the corner.
    pub fn corner_values(&self) -> (f64, f64) {
        (self.left.jet(self.corner)[0], self.right.jet(self.corner)[0])
    }
}

/// Profile values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ULValues {
    pub upper: [f64; 3],
    pub lower: [f64; 3],
}

/// One explicit upper/lower pair with every construction constant.
///
/// For the `E_*` cases `lambda1`, `lambda2` hold the roots `sigma1`,
/// `sigma2` of `d1 x^2 - s x + r1 beta_lower`, `ratio` is `S`, `amplitude`
/// is `B` and `p` is `p2`. For the `E*` cases they are the roots of
/// `d2 x^2 - s x + r2 beta_upper`, `R`, `A` and `p1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ULConstruction {
    pub case: ULCase,
    pub s: f64,
    pub params: Params,
    pub derived: DerivedQuantities,
    pub lambda1: f64,
    pub lambda2: f64,
    pub ratio: f64,
    pub amplitude: f64,
    pub p: f64,
    /// Absent in the critical cases.
    pub mu: Option<f64>,
    pub q: f64,
    /// The printed lower bound on `q`; `q` is twice this.
    pub q_bound: f64,
    pub lstar: Option<f64>,
    pub mconst: Option<f64>,
    pub z0: Option<f64>,
    pub z1: Option<f64>,
    pub z2: Option<f64>,
    pub upper: [Profile; 3],
    pub lower: [Profile; 3],
}

impl ULConstruction {
    /// The invaded state approached as `z -> -inf`.
    pub fn tail_target(&self) -> KineticState {
        if self.case.invades_estar() {
            self.derived.e_upper()
        } else {
            self.derived.e_lower()
        }
    }

    /// Sorted distinct finite corner points.
    pub fn corners(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self
            .upper
            .iter()
            .chain(&self.lower)
            .map(|p| p.corner)
            .filter(|z| z.is_finite())
            .collect();
        c.sort_by(f64::total_cmp);
        c.dedup();
        c
    }

    /// The quadratic whose roots are `lambda1`, `lambda2`.
    pub fn char_poly(&self, x: f64) -> f64 {
        let p = &self.params;
        if self.case.invades_estar() {
            p.d2 * x * x - self.s * x + p.r2 * self.derived.beta_upper
        } else {
            p.d1 * x * x - self.s * x + p.r1 * self.derived.beta_lower
        }
    }

    /// `|char_poly(lambda_i)|` relative to the size of its terms.
    pub fn root_residuals(&self) -> [f64; 2] {
        let p = &self.params;
        let (d, c) = if self.case.invades_estar() {
            (p.d2, p.r2 * self.derived.beta_upper)
        } else {
            (p.d1, p.r1 * self.derived.beta_lower)
        };
        [self.lambda1, self.lambda2].map(|x| {
            let scale = d * x * x + self.s * x + c;
            self.char_poly(x).abs() / scale
        })
    }

    /// The same construction with a different `q`, the corner depending on
    /// it recomputed. Used to check that the verifier catches bad constants.
    pub fn with_q(&self, q: f64) -> ULConstruction {
        let mut c = self.clone();
        c.q = q;
        let slot = if self.case.invades_estar() { 1 } else { 0 };
        let lam = self.lambda1;
        let zq = match (self.case, self.mu) {
            (ULCase::EStarSuper | ULCase::ELowSuper, Some(mu)) => -q.ln() / ((mu - 1.0) * lam),
            _ => -(q / self.lstar.expect("critical case has L")).powi(2),
        };
        c.lower[slot] = alien_lower(self.case, lam, self.mu, self.lstar, q, zq);
        if self.case.invades_estar() {
            c.z2 = Some(zq);
        } else {
            c.z0 = Some(zq);
        }
        c
    }
}

pub fn eval_ul(c: &ULConstruction, z: f64) -> ULValues {
    ULValues {
        upper: [0, 1, 2].map(|i| c.upper[i].value(z)),
        lower: [0, 1, 2].map(|i| c.lower[i].value(z)),
    }
}

fn violated(what: &str) -> Error {
    Error::HypothesisViolated(what.to_string())
}

/// Lower profile of the alien prey: `e^{lz} - q e^{mu l z}` or
/// `[L(-z) - q(-z)^{1/2}] e^{lz}`, cut off at `zq`.
fn alien_lower(
    case: ULCase,
    lam: f64,
    mu: Option<f64>,
    lstar: Option<f64>,
    q: f64,
    zq: f64,
) -> Profile {
    let left = match (case.is_critical(), mu, lstar) {
        (false, Some(mu), _) => Piece::with(0.0, &[(1.0, Power::Zero, lam), (-q, Power::Zero, mu * lam)]),
        (true, _, Some(l)) => Piece::with(0.0, &[(l, Power::One, lam), (-q, Power::Half, lam)]),
        _ => unreachable!("constants are set for every case"),
    };
    Profile {
        corner: zq,
        left,
        right: Piece::constant(0.0),
    }
}

/// Solve `p L (-z) e^{lz} = 1` on `[-2/l, -1/l]` by bisection.
fn critical_corner(p: f64, l: f64, lam: f64) -> Result<f64> {
    let f = |z: f64| p * l * (-z) * (lam * z).exp() - 1.0;
    let (mut lo, mut hi) = (-2.0 / lam, -1.0 / lam);
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if !(flo < 0.0 && fhi >= 0.0) {
        return Err(Error::RootBracket(format!(
            "p L (-z) e^(lz) - 1 has values {flo:e} and {fhi:e} at the ends of [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Build one of the four constructions with the free constants pinned in
/// the middle of their admissible ranges.
pub fn build_ul(p: &Params, s: f64, case: ULCase) -> Result<ULConstruction> {
    let dq = derive(p)?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(violated("s>0"));
    }
    let rep = check_conditions(p, Some(s))?;
    let top = 2.0 * p.a - 1.0;

    let (beta, s_min, speed_label) = if case.invades_estar() {
        if dq.beta_upper <= 0.0 {
            return Err(violated("beta*>0"));
        }
        (dq.beta_upper, dq.s_upper.unwrap(), "s*")
    } else {
        if dq.beta_lower <= 0.0 {
            return Err(violated("beta_*>0"));
        }
        (dq.beta_lower, dq.s_lower.unwrap(), "s_*")
    };
    let regime = speed_regime(s, s_min);
    let needed = if case.is_critical() {
        SpeedRegime::Critical
    } else {
        SpeedRegime::Above
    };
    if regime != needed {
        let rel = if case.is_critical() { "=" } else { ">" };
        return Err(violated(&format!("s{rel}{speed_label}")));
    }
    let checks: [(bool, &str); 2] = match case {
        ULCase::EStarSuper => [(rep.vr, "vr"), (rep.vd, "vd")],
        ULCase::EStarCritical => [(rep.vr, "vr"), (rep.vvvd0, "vvvd0")],
        ULCase::ELowSuper => [(rep.uur, "uur"), (rep.uud, "uud")],
        ULCase::ELowCritical => [(rep.uur, "uur"), (rep.uuud0, "uuud0")],
    };
    for (ok, name) in checks {
        if !ok {
            return Err(violated(name));
        }
    }

    // Speed of the alien prey (`d`, `r`) and the opposite prey (`d_o`).
    let (d, r, d_o) = if case.invades_estar() {
        (p.d2, p.r2, p.d1)
    } else {
        (p.d1, p.r1, p.d2)
    };
    let s = if case.is_critical() { s_min } else { s };

    let (lambda1, lambda2) = if case.is_critical() {
        (s / (2.0 * d), s / (2.0 * d))
    } else {
        let disc = (s * s - 4.0 * d * r * beta).sqrt();
        // The smaller root in cancellation-free form.
        let l2 = (s + disc) / (2.0 * d);
        (r * beta / (d * l2), l2)
    };
    let lam = lambda1;

    let (resident, w_res, ratio_num, q_num) = if case.invades_estar() {
        (
            dq.u_star,
            dq.w_star,
            p.r1 * (p.k + p.b1 * top),
            p.h * p.b1 * dq.w_star + 1.0,
        )
    } else {
        (
            dq.v_lowstar,
            dq.w_lowstar,
            p.r2 * (p.h + p.b2 * top),
            1.0 + p.k * p.b2 * dq.w_lowstar,
        )
    };
    let amplitude = top - w_res;
    let ratio = ratio_num / -(d_o * lam * lam - s * lam);
    // Coupling of the alien prey to the resident prey via the predator term.
    let (alien_b, res_b) = if case.invades_estar() {
        (p.b2, p.b1)
    } else {
        (p.b1, p.b2)
    };
    let q_coupling = q_num + alien_b * amplitude;

    let floor = if case.is_critical() { 2.0 / E } else { 0.0 };
    let pp = (ratio.max(floor) + 1.0) / 2.0;

    let mut mu = None;
    let mut lstar = None;
    let mut mconst = None;
    let q_bound;
    let corner_alien;
    let corner_res;
    let corner_up;
    let critical_form;

    if case.is_critical() {
        let l = lam * E * E / 2.0;
        let m = (7.0 / (2.0 * lam * E)).powf(3.5);
        q_bound = (4.0 * r * l * l * m * q_coupling / d).max(l * (2.0 / lam).sqrt());
        lstar = Some(l);
        mconst = Some(m);
        corner_up = -2.0 / lam;
        corner_res = critical_corner(pp, l, lam)?;
        critical_form = true;
    } else {
        let m_hi = 2.0f64.min(lambda2 / lambda1);
        let mu_v = (1.0 + m_hi) / 2.0;
        let g_mu = d * (mu_v * lam).powi(2) - s * mu_v * lam + r * beta;
        if g_mu >= 0.0 {
            return Err(violated("char_poly(mu lambda1)<0"));
        }
        q_bound = 1.0f64.max(r * q_coupling / -g_mu);
        mu = Some(mu_v);
        corner_up = 0.0;
        corner_res = -pp.ln() / lam;
        critical_form = false;
    }
    let q = 2.0 * q_bound;
    corner_alien = if critical_form {
        -(q / lstar.unwrap()).powi(2)
    } else {
        -q.ln() / ((mu.unwrap() - 1.0) * lam)
    };

    // The shape function: e^{lz} in the super case, L (-z) e^{lz} in the
    // critical case.
    let shape = |coef: f64| -> (f64, Power, f64) {
        match lstar {
            Some(l) => (coef * l, Power::One, lam),
            None => (coef, Power::Zero, lam),
        }
    };
    let upper_alien = Profile {
        corner: corner_up,
        left: Piece::with(0.0, &[shape(1.0)]),
        right: Piece::constant(1.0),
    };
    let upper_res = Profile {
        corner: corner_up,
        left: Piece::with(resident, &[shape(res_b * w_res)]),
        right: Piece::constant(1.0),
    };
    let upper_pred = Profile {
        corner: corner_up,
        left: Piece::with(w_res, &[shape(amplitude)]),
        right: Piece::constant(top),
    };
    let lower_res = Profile {
        corner: corner_res,
        left: Piece::with(resident, &[shape(-resident * pp)]),
        right: Piece::constant(0.0),
    };
    let lower_pred = Profile {
        corner: corner_up,
        left: Piece::with(w_res, &[shape(-w_res)]),
        right: Piece::constant(0.0),
    };
    let lower_alien = alien_lower(case, lam, mu, lstar, q, corner_alien);

    let (upper, lower, z0, z1, z2) = if case.invades_estar() {
        (
            [upper_res, upper_alien, upper_pred],
            [lower_res, lower_alien, lower_pred],
            None,
            Some(corner_res),
            Some(corner_alien),
        )
    } else {
        (
            [upper_alien, upper_res, upper_pred],
            [lower_alien, lower_res, lower_pred],
            Some(corner_alien),
            None,
            Some(corner_res),
        )
    };

    Ok(ULConstruction {
        case,
        s,
        params: *p,
        derived: dq,
        lambda1,
        lambda2,
        ratio,
        amplitude,
        p: pp,
        mu,
        q,
        q_bound,
        lstar,
        mconst,
        z0,
        z1,
        z2,
        upper,
        lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn ps_a_constants() {
        let c = build_ul(&presets::ps_a(), 2.0, ULCase::EStarSuper).unwrap();
        assert!((c.lambda1 - 0.490098).abs() < 1e-6);
        assert!((c.lambda2 - 1.509902).abs() < 1e-6);
        assert!((c.ratio - 0.7557278).abs() < 1e-7);
        assert_eq!(c.amplitude, 4.5);
        assert_eq!(c.mu, Some(1.5));
        assert!((c.char_poly(1.5 * c.lambda1) + 0.189853).abs() < 1e-6);
        assert!((c.q_bound - 7.0581).abs() < 1e-4);
        assert!(c.root_residuals().iter().all(|r| *r < 1e-12));
        let (z1, z2) = (c.z1.unwrap(), c.z2.unwrap());
        assert!(z2 < 0.0 && 0.0 <= z1);
    }

    #[test]
    fn ps_a_critical_constants() {
        let p = presets::ps_a_critical();
        let s = derive(&p).unwrap().s_upper.unwrap();
        let c = build_ul(&p, s, ULCase::EStarCritical).unwrap();
        assert!((c.lambda1 - 0.860233).abs() < 1e-6);
        assert!((c.lstar.unwrap() - 3.17816).abs() < 1e-5);
        assert!((c.mconst.unwrap() - 4.1025318).abs() < 1e-7);
        let z1 = c.z1.unwrap();
        assert!(z1 >= -2.0 / c.lambda1 && z1 <= -1.0 / c.lambda1);
        assert!(c.z2.unwrap() < -2.0 / c.lambda1);
        let lhs = c.p * c.lstar.unwrap() * (-z1) * (c.lambda1 * z1).exp();
        assert!((lhs - 1.0).abs() < 1e-14);
    }

    #[test]
    fn subcritical_speed_is_rejected() {
        let p = presets::ps_a();
        let s = 0.9 * derive(&p).unwrap().s_upper.unwrap();
        match build_ul(&p, s, ULCase::EStarSuper) {
            Err(Error::HypothesisViolated(m)) => assert_eq!(m, "s>s*"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_case_is_rejected() {
        match build_ul(&presets::ps_a(), 2.0, ULCase::ELowSuper) {
            Err(Error::HypothesisViolated(m)) => assert_eq!(m, "beta_*>0"),
            other => panic!("{other:?}"),
        }
        match build_ul(&presets::ps_a(), 2.0, ULCase::EStarCritical) {
            Err(Error::HypothesisViolated(m)) => assert_eq!(m, "s=s*"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tails_and_right_branches() {
        let c = build_ul(&presets::ps_a(), 2.0, ULCase::EStarSuper).unwrap();
        let far = eval_ul(&c, -200.0);
        let t = c.tail_target().to_array();
        for i in 0..3 {
            assert!((far.upper[i] - t[i]).abs() < 1e-12);
            assert!((far.lower[i] - t[i]).abs() < 1e-12);
        }
        let right = eval_ul(&c, c.z1.unwrap() + 1.0);
        assert_eq!(right.upper, [1.0, 1.0, 5.0]);
        assert_eq!(right.lower, [0.0, 0.0, 0.0]);
        let (l, r) = c.lower[1].corner_values();
        assert!(l.abs() < 1e-15 && r == 0.0);
    }

    #[test]
    fn jets_match_finite_differences() {
        let c = build_ul(&presets::ps_a_critical(), derive(&presets::ps_a_critical()).unwrap().s_upper.unwrap(), ULCase::EStarCritical).unwrap();
        let h = 1e-4;
        for prof in c.upper.iter().chain(&c.lower) {
            let z = prof.corner - 3.0;
            let j = prof.jet(z);
            let d1 = (prof.value(z + h) - prof.value(z - h)) / (2.0 * h);
            let d2 = (prof.value(z + h) - 2.0 * j[0] + prof.value(z - h)) / (h * h);
            assert!((j[1] - d1).abs() < 1e-6 * (1.0 + d1.abs()));
            assert!((j[2] - d2).abs() < 1e-4 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn case_names_round_trip() {
        for c in ULCase::ALL {
            assert_eq!(c.name().parse::<ULCase>().unwrap(), c);
        }
        assert!("nope".parse::<ULCase>().is_err());
    }
}
