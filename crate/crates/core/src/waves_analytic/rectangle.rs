use crate::error::{Error, Result};
use crate::model::{check_conditions, derive, DerivedQuantities, Params};

/// The boxes `[m2, M2] x [m3, M3]` at one `theta` and the sign quantities
/// on their faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangleCheck {
    pub theta: f64,
    pub eps: f64,
    pub delta3: f64,
    pub m2: f64,
    pub big_m2: f64,
    pub m3: f64,
    pub big_m3: f64,
    /// Bound `max(0, 1 - k m2 - b1 m3)` on the limsup of the weak prey.
    pub m1_theta: f64,
    pub alpha2: f64,
    /// `alpha2` from its expanded closed form in `theta`.
    pub alpha2_expanded: f64,
    pub omega2: f64,
    pub alpha3: f64,
    pub omega3: f64,
}

impl RectangleCheck {
    pub fn alpha2_positive(&self) -> bool {
        self.alpha2 > 0.0
    }

    pub fn omega2_negative(&self) -> bool {
        self.omega2 < 0.0
    }

    pub fn alpha3_positive(&self) -> bool {
        self.alpha3 > 0.0
    }

    pub fn omega3_negative(&self) -> bool {
        self.omega3 < 0.0
    }

    pub fn all_signs_ok(&self) -> bool {
        self.alpha2_positive()
            && self.omega2_negative()
            && self.alpha3_positive()
            && self.omega3_negative()
    }
}

fn require_semi_tail(p: &Params) -> Result<DerivedQuantities> {
    let dq = derive(p)?;
    if dq.beta_upper <= 0.0 {
        return Err(Error::HypothesisViolated("beta*>0".into()));
    }
    if dq.beta_lower >= 0.0 {
        return Err(Error::HypothesisViolated("beta_*<0".into()));
    }
    if !check_conditions(p, None)?.hb2 {
        return Err(Error::HypothesisViolated("hb2".into()));
    }
    Ok(dq)
}

/// `min(w_*/2, (a gamma2 - 1)/2)`. The construction also allows the
/// liminf of the predator along the wave, which an analytic check cannot see.
pub fn default_delta3(p: &Params) -> Result<f64> {
    let dq = derive(p)?;
    let d = (dq.w_lowstar / 2.0).min((p.a * dq.gamma2 - 1.0) / 2.0);
    if d <= 0.0 {
        return Err(Error::HypothesisViolated("a gamma2 - 1 > 0".into()));
    }
    Ok(d)
}

/// Upper bound on `eps` for the rectangles to contract.
pub fn eps_max(p: &Params, delta3: f64) -> Result<f64> {
    let dq = derive(p)?;
    if dq.beta_upper <= 0.0 {
        return Err(Error::HypothesisViolated("beta*>0".into()));
    }
    let g = dq.gamma2;
    let Params { h, k, a, b1, b2, .. } = *p;
    if a * g - 1.0 <= 0.0 {
        return Err(Error::HypothesisViolated("a gamma2 - 1 > 0".into()));
    }
    if !(delta3 > 0.0) {
        return Err(Error::HypothesisViolated("delta3>0".into()));
    }
    let terms = [
        g,
        delta3,
        (h * k * g + h * b1 * delta3) / (h * k + h * b1 + b2),
        (a * k * g + a * b1 * delta3) / (a * k + a * b1 + 1.0),
        (a * g - delta3 - 1.0) / a,
    ];
    Ok(terms.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn rectangle_signs(p: &Params, theta: f64, eps: f64, delta3: f64) -> Result<RectangleCheck> {
    let dq = require_semi_tail(p)?;
    let bound = eps_max(p, delta3)?;
    if !(eps > 0.0 && eps < bound) {
        return Err(Error::HypothesisViolated(format!("0<eps<{bound}")));
    }
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::HypothesisViolated("0<=theta<1".into()));
    }
    let Params { h, k, a, b1, b2, .. } = *p;
    let g = dq.gamma2;
    let (vl, wl) = (dq.v_lowstar, dq.w_lowstar);
    let top = 2.0 * a - 1.0;
    let t1 = 1.0 - theta;

    let m2 = t1 * (g - eps) + theta * vl;
    let big_m2 = t1 * (1.0 + eps * eps) + theta * vl;
    let m3 = t1 * (delta3 - eps) + theta * wl;
    let big_m3 = t1 * (top + eps) + theta * wl;
    let m1_theta = (1.0 - k * m2 - b1 * m3).max(0.0);

    let alpha2 = 1.0 - h * m1_theta - m2 - b2 * big_m3;
    let omega2 = 1.0 - big_m2 - b2 * m3;
    let alpha3 = -1.0 + a * m2 - m3;
    let omega3 = -1.0 + a * m1_theta + a * big_m2 - big_m3;

    let alpha2_expanded = if m1_theta > 0.0 {
        t1 * (h * k * g + h * b1 * delta3 - eps * (-1.0 + h * k + h * b1 + b2))
            - theta * h * dq.beta_lower
    } else {
        t1 * (h + (1.0 - b2) * eps)
    };

    Ok(RectangleCheck {
        theta,
        eps,
        delta3,
        m2,
        big_m2,
        m3,
        big_m3,
        m1_theta,
        alpha2,
        alpha2_expanded,
        omega2,
        alpha3,
        omega3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn eps_max_ps_a() {
        let p = presets::ps_a();
        assert!((eps_max(&p, 0.1).unwrap() - 0.1 / 3.0).abs() < 1e-15);
        assert!((default_delta3(&p).unwrap() - 0.1).abs() < 1e-15);
        assert!(eps_max(&p, 1e-9).unwrap() <= 1e-9);
    }

    #[test]
    fn eps_max_rejects_ps_b() {
        assert!(matches!(
            eps_max(&presets::ps_b(), 0.1),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn theta_zero_values() {
        let r = rectangle_signs(&presets::ps_a(), 0.0, 0.03, 0.1).unwrap();
        assert!((r.alpha3 - 0.04).abs() < 1e-15);
        assert!((r.omega2 + 0.0023).abs() < 1e-15);
        assert!((r.alpha2 - r.alpha2_expanded).abs() < 1e-12);
        assert!(r.all_signs_ok());
    }

    #[test]
    fn large_eps_is_rejected() {
        assert!(rectangle_signs(&presets::ps_a(), 0.0, 0.05, 0.1).is_err());
        assert!(rectangle_signs(&presets::ps_a(), 1.0, 0.03, 0.1).is_err());
    }
}
