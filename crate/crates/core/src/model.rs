//! Model parameters, closed-form equilibria and invasion speeds, and the
//! hypothesis checker for the existence theorems.

use std::fmt;

use crate::config::Config;
use crate::equilibria::KineticState;
use crate::error::{Error, Result};

/// The eleven positive constants of the reaction-diffusion system
///
/// ```text
/// u_t = d1 u_xx + r1 u (1 - u - k v - b1 w)
/// v_t = d2 v_xx + r2 v (1 - h u - v - b2 w)
/// w_t = d3 w_xx + r3 w (-1 + a u + a v - w)
/// ```
///
/// `u` is the weak prey, `v` the strong prey and `w` the predator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    /// Competition felt by `v` from `u`.
    pub h: f64,
    /// Competition felt by `u` from `v`.
    pub k: f64,
    /// Conversion rate of both preys into predator.
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
}

impl Params {
    pub fn diffusivities(&self) -> [f64; 3] {
        [self.d1, self.d2, self.d3]
    }

    pub fn rates(&self) -> [f64; 3] {
        [self.r1, self.r2, self.r3]
    }

    pub fn max_diffusivity(&self) -> f64 {
        self.d1.max(self.d2).max(self.d3)
    }

    pub fn max_rate(&self) -> f64 {
        self.r1.max(self.r2).max(self.r3)
    }

    /// Upper bound `max(1, 2a - 1)` of the invariant region.
    pub fn density_cap(&self) -> f64 {
        (2.0 * self.a - 1.0).max(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        validate(self)
    }

    pub fn from_config(cfg: &Config) -> Result<Self> {
        let p = Params {
            d1: cfg.require_number("d1")?,
            d2: cfg.require_number("d2")?,
            d3: cfg.require_number("d3")?,
            r1: cfg.require_number("r1")?,
            r2: cfg.require_number("r2")?,
            r3: cfg.require_number("r3")?,
            h: cfg.require_number("h")?,
            k: cfg.require_number("k")?,
            a: cfg.require_number("a")?,
            b1: cfg.require_number("b1")?,
            b2: cfg.require_number("b2")?,
        };
        Ok(p)
    }

    pub fn to_config(&self) -> Config {
        let mut cfg = Config::default();
        for (key, value) in self.named() {
            cfg.set(key, value).expect("model keys are valid");
        }
        cfg
    }

    pub fn named(&self) -> [(&'static str, f64); 11] {
        [
            ("d1", self.d1),
            ("d2", self.d2),
            ("d3", self.d3),
            ("r1", self.r1),
            ("r2", self.r2),
            ("r3", self.r3),
            ("h", self.h),
            ("k", self.k),
            ("a", self.a),
            ("b1", self.b1),
            ("b2", self.b2),
        ]
    }
}

/// Check positivity of all constants and `a > 1`, `h < 1 < k`.
pub fn validate(p: &Params) -> Result<()> {
    for (name, value) in p.named() {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidParams(format!("{name}>0")));
        }
    }
    if p.a <= 1.0 {
        return Err(Error::InvalidParams("a>1".into()));
    }
    if !(p.h < 1.0 && 1.0 < p.k) {
        return Err(Error::InvalidParams("h<1<k".into()));
    }
    Ok(())
}

/// Every closed-form quantity that depends only on the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// `E* = (u*, 0, w*)`, predator with the weak prey.
    pub u_star: f64,
    pub w_star: f64,
    /// `E_* = (0, v_*, w_*)`, predator with the strong prey.
    pub v_lowstar: f64,
    pub w_lowstar: f64,
    /// Per-capita growth rate of `v` at `E*`.
    pub beta_upper: f64,
    /// Per-capita growth rate of `u` at `E_*`.
    pub beta_lower: f64,
    pub delta: f64,
    pub delta_u: f64,
    pub delta_v: f64,
    pub delta_w: f64,
    /// Positive co-existence state, when it exists.
    pub ec: Option<KineticState>,
    /// Linear invasion speed into `E*`; present iff `beta_upper > 0`.
    pub s_upper: Option<f64>,
    /// Linear invasion speed into `E_*`; present iff `beta_lower > 0`.
    pub s_lower: Option<f64>,
    /// Lower bound `1 - h - b2 (2a - 1)` on the strong prey at the stable tail.
    pub gamma2: f64,
}

impl DerivedQuantities {
    pub fn e_upper(&self) -> KineticState {
        KineticState::new(self.u_star, 0.0, self.w_star)
    }

    pub fn e_lower(&self) -> KineticState {
        KineticState::new(0.0, self.v_lowstar, self.w_lowstar)
    }

    pub fn require_ec(&self) -> Result<KineticState> {
        self.ec.ok_or(Error::NoCoexistenceState)
    }
}

pub fn derive(p: &Params) -> Result<DerivedQuantities> {
    validate(p)?;
    let Params {
        d1,
        d2,
        r1,
        r2,
        h,
        k,
        a,
        b1,
        b2,
        ..
    } = *p;

    let u_star = (1.0 + b1) / (1.0 + a * b1);
    let w_star = (a - 1.0) / (1.0 + a * b1);
    let v_lowstar = (1.0 + b2) / (1.0 + a * b2);
    let w_lowstar = (a - 1.0) / (1.0 + a * b2);

    let beta_upper = 1.0 - h * u_star - b2 * w_star;
    let beta_lower = 1.0 - k * v_lowstar - b1 * w_lowstar;

    let delta = 1.0 - h * k + a * b1 * (1.0 - h) - a * b2 * (k - 1.0);
    let delta_u = -b1 * (a - 1.0) + b2 * (a - k) - (k - 1.0);
    let delta_v = b1 * (a - h) - b2 * (a - 1.0) + (1.0 - h);
    let delta_w = a * (2.0 - h - k) - (1.0 - h * k);

    let ec = if delta != 0.0 {
        let (uc, vc, wc) = (delta_u / delta, delta_v / delta, delta_w / delta);
        (uc > 0.0 && vc > 0.0 && wc > 0.0).then(|| KineticState::new(uc, vc, wc))
    } else {
        None
    };

    let s_upper = (beta_upper > 0.0).then(|| 2.0 * (d2 * r2 * beta_upper).sqrt());
    let s_lower = (beta_lower > 0.0).then(|| 2.0 * (d1 * r1 * beta_lower).sqrt());

    Ok(DerivedQuantities {
        u_star,
        w_star,
        v_lowstar,
        w_lowstar,
        beta_upper,
        beta_lower,
        delta,
        delta_u,
        delta_v,
        delta_w,
        ec,
        s_upper,
        s_lower,
        gamma2: 1.0 - h - b2 * (2.0 * a - 1.0),
    })
}

/// The alternative closed forms of the two growth rates, written over the
/// common denominators `1 + a b1` and `1 + a b2`.
pub fn beta_closed_forms(p: &Params) -> (f64, f64) {
    let Params { h, k, a, b1, b2, .. } = *p;
    let upper = (b1 * (a - h) - b2 * (a - 1.0) + (1.0 - h)) / (1.0 + a * b1);
    let lower = (-b1 * (a - 1.0) + b2 * (a - k) - (k - 1.0)) / (1.0 + a * b2);
    (upper, lower)
}

/// Relative tolerance for recognising `s` as the critical speed.
pub const CRITICAL_SPEED_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedRegime {
    Below,
    Critical,
    Above,
}

pub fn speed_regime(s: f64, s_min: f64) -> SpeedRegime {
    if (s - s_min).abs() <= CRITICAL_SPEED_RTOL * s_min.abs().max(f64::MIN_POSITIVE) {
        SpeedRegime::Critical
    } else if s > s_min {
        SpeedRegime::Above
    } else {
        SpeedRegime::Below
    }
}

/// Which stable tail the strong-alien existence result predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StableTail {
    /// `E_*`: the alien prey replaces the aboriginal one.
    Semi,
    /// `E_c`: all three species co-exist.
    Coexist,
}

impl fmt::Display for StableTail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StableTail::Semi => "semi",
            StableTail::Coexist => "coexist",
        })
    }
}

/// One boolean per hypothesis of the existence theorems, plus verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// `a > 1` and `h < 1 < k`.
    pub admissible: bool,
    /// `beta_upper > 0`, written as an upper bound on `b2`.
    pub positive: bool,
    /// `beta_lower > 0`: `a > k` and a lower bound on `b2`.
    pub positive2: bool,
    /// Positive co-existence state exists.
    pub co_ex: bool,
    /// `k sqrt(b2/b1) + h sqrt(b1/b2) < 2`.
    pub ode_lyapu: bool,
    /// `r2 beta_upper >= r1 [k + b1 (2a - 1)]`.
    pub vr: bool,
    /// `d2 >= max(d1, d3)` and `r2 beta_upper >= r3`.
    pub vd: bool,
    /// `d3/2 < d1 = d2 <= d3` and `r2 (2 - d3/d2) beta_upper >= r3`.
    pub vvvd0: bool,
    /// `a > 1/(1-h)` and `b2 < (a(1-h) - 1) / (a(2a-1))`.
    pub hb2: bool,
    /// `r1 beta_lower >= r2 [h + b2 (2a - 1)]`.
    pub uur: bool,
    /// `d1 >= max(d2, d3)` and `r1 beta_lower >= r3`.
    pub uud: bool,
    /// `d3/2 < d1 = d2 <= d3` and `r1 (2 - d3/d1) beta_lower >= r3`.
    pub uuud0: bool,
    /// The same condition with `beta_upper` in the rate bound, as it is
    /// sometimes printed. Kept for comparison only.
    pub uuud0_with_beta_upper: bool,
    pub speed: Option<f64>,
    pub regime_upper: Option<SpeedRegime>,
    pub regime_lower: Option<SpeedRegime>,
    /// Strong alien invading `E*`, stable tail `E_*`.
    pub thm_sc1_semi: bool,
    /// Strong alien invading `E*`, stable tail `E_c`.
    pub thm_sc1_coexist: bool,
    /// Weak alien invading `E_*`.
    pub thm_cs2_applicable: bool,
    /// Weak alien invading `E_*` with stable tail `E_c`.
    pub thm_cs2_coexist: bool,
    pub minimal_speed_defined: bool,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn thm_sc1_applicable(&self) -> Option<StableTail> {
        if self.thm_sc1_semi {
            Some(StableTail::Semi)
        } else if self.thm_sc1_coexist {
            Some(StableTail::Coexist)
        } else {
            None
        }
    }

    pub fn flags(&self) -> [(&'static str, bool); 12] {
        [
            ("admissible", self.admissible),
            ("positive", self.positive),
            ("positive2", self.positive2),
            ("co_ex", self.co_ex),
            ("ode_lyapu", self.ode_lyapu),
            ("vr", self.vr),
            ("vd", self.vd),
            ("vvvd0", self.vvvd0),
            ("hb2", self.hb2),
            ("uur", self.uur),
            ("uud", self.uud),
            ("uuud0", self.uuud0),
        ]
    }
}

fn equal_diffusion_window(p: &Params) -> bool {
    p.d3 / 2.0 < p.d1 && p.d1 == p.d2 && p.d2 <= p.d3
}

/// Evaluate every hypothesis. With `s` given, the speed regime relative to
/// the relevant minimal speed decides between the supercritical and the
/// critical diffusion conditions; without it either one suffices.
pub fn check_conditions(p: &Params, s: Option<f64>) -> Result<ConditionReport> {
    let dq = derive(p)?;
    let Params {
        d1,
        d2,
        d3,
        r1,
        r2,
        r3,
        h,
        k,
        a,
        b1,
        b2,
    } = *p;
    let bu = dq.beta_upper;
    let bl = dq.beta_lower;

    let positive = b2 < (a - h) / (a - 1.0) * b1 + (1.0 - h) / (a - 1.0);
    let positive2 = a > k && b2 > (a - 1.0) / (a - k) * b1 + (k - 1.0) / (a - k);
    let co_ex = dq.ec.is_some();
    let ode_lyapu = k * (b2 / b1).sqrt() + h * (b1 / b2).sqrt() < 2.0;
    let vr = r2 * bu >= r1 * (k + b1 * (2.0 * a - 1.0));
    let vd = d2 >= d1.max(d3) && r2 * bu >= r3;
    let vvvd0 = equal_diffusion_window(p) && r2 * (2.0 - d3 / d2) * bu >= r3;
    let hb2 = a > 1.0 / (1.0 - h) && b2 < (a * (1.0 - h) - 1.0) / (a * (2.0 * a - 1.0));
    let uur = r1 * bl >= r2 * (h + b2 * (2.0 * a - 1.0));
    let uud = d1 >= d2.max(d3) && r1 * bl >= r3;
    let uuud0 = equal_diffusion_window(p) && r1 * (2.0 - d3 / d1) * bl >= r3;
    let uuud0_with_beta_upper = equal_diffusion_window(p) && r1 * (2.0 - d3 / d1) * bu >= r3;

    let regime_upper = match (s, dq.s_upper) {
        (Some(s), Some(su)) => Some(speed_regime(s, su)),
        _ => None,
    };
    let regime_lower = match (s, dq.s_lower) {
        (Some(s), Some(sl)) => Some(speed_regime(s, sl)),
        _ => None,
    };

    let diffusion_ok = |regime: Option<SpeedRegime>, above: bool, critical: bool| match s {
        None => above || critical,
        Some(_) => match regime {
            Some(SpeedRegime::Above) => above,
            Some(SpeedRegime::Critical) => critical,
            Some(SpeedRegime::Below) | None => false,
        },
    };

    let sc1_core = positive && vr && diffusion_ok(regime_upper, vd, vvvd0);
    let thm_sc1_semi = sc1_core && bl < 0.0 && hb2;
    let thm_sc1_coexist = sc1_core && co_ex && ode_lyapu;
    let thm_cs2_applicable = positive2 && uur && diffusion_ok(regime_lower, uud, uuud0);
    let thm_cs2_coexist = thm_cs2_applicable && co_ex && ode_lyapu;

    let mut notes = Vec::new();
    if uuud0 != uuud0_with_beta_upper {
        notes.push(format!(
            "uuud0 uses beta_lower ({}); with beta_upper in the rate bound it would be {}",
            uuud0, uuud0_with_beta_upper
        ));
    }

    Ok(ConditionReport {
        admissible: a > 1.0 && h < 1.0 && 1.0 < k,
        positive,
        positive2,
        co_ex,
        ode_lyapu,
        vr,
        vd,
        vvvd0,
        hb2,
        uur,
        uud,
        uuud0,
        uuud0_with_beta_upper,
        speed: s,
        regime_upper,
        regime_lower,
        thm_sc1_semi,
        thm_sc1_coexist,
        thm_cs2_applicable,
        thm_cs2_coexist,
        minimal_speed_defined: dq.s_upper.is_some() || dq.s_lower.is_some(),
        notes,
    })
}

/// Slack of one inequality; positive means satisfied.
#[derive(Debug, Clone, PartialEq)]
pub struct Margin {
    pub condition: &'static str,
    pub inequality: &'static str,
    pub slack: f64,
}

/// Slack of every scalar inequality behind the flags of [`ConditionReport`].
/// Equalities (`d1 = d2`) report `-|d1 - d2|`.
pub fn condition_margins(p: &Params) -> Result<Vec<Margin>> {
    let dq = derive(p)?;
    let Params {
        d1,
        d2,
        d3,
        r1,
        r2,
        r3,
        h,
        k,
        a,
        b1,
        b2,
    } = *p;
    let bu = dq.beta_upper;
    let bl = dq.beta_lower;
    let m = |condition, inequality, slack| Margin {
        condition,
        inequality,
        slack,
    };
    Ok(vec![
        m("admissible", "a > 1", a - 1.0),
        m("admissible", "h < 1", 1.0 - h),
        m("admissible", "k > 1", k - 1.0),
        m(
            "positive",
            "b2 < (a-h)/(a-1) b1 + (1-h)/(a-1)",
            (a - h) / (a - 1.0) * b1 + (1.0 - h) / (a - 1.0) - b2,
        ),
        m("positive2", "a > k", a - k),
        m(
            "positive2",
            "b2 > (a-1)/(a-k) b1 + (k-1)/(a-k)",
            b2 - ((a - 1.0) / (a - k) * b1 + (k - 1.0) / (a - k)),
        ),
        m(
            "co_ex",
            "min(uc, vc, wc) > 0",
            if dq.delta != 0.0 {
                (dq.delta_u / dq.delta)
                    .min(dq.delta_v / dq.delta)
                    .min(dq.delta_w / dq.delta)
            } else {
                f64::NEG_INFINITY
            },
        ),
        m(
            "ode_lyapu",
            "k sqrt(b2/b1) + h sqrt(b1/b2) < 2",
            2.0 - (k * (b2 / b1).sqrt() + h * (b1 / b2).sqrt()),
        ),
        m(
            "vr",
            "r2 beta* >= r1 [k + b1 (2a-1)]",
            r2 * bu - r1 * (k + b1 * (2.0 * a - 1.0)),
        ),
        m("vd", "d2 >= max(d1, d3)", d2 - d1.max(d3)),
        m("vd", "r2 beta* >= r3", r2 * bu - r3),
        m("vvvd0", "d1 > d3/2", d1 - d3 / 2.0),
        m("vvvd0", "d1 = d2", -(d1 - d2).abs()),
        m("vvvd0", "d2 <= d3", d3 - d2),
        m("vvvd0", "r2 (2 - d3/d2) beta* >= r3", r2 * (2.0 - d3 / d2) * bu - r3),
        m("hb2", "a > 1/(1-h)", a - 1.0 / (1.0 - h)),
        m(
            "hb2",
            "b2 < (a(1-h) - 1) / (a(2a-1))",
            (a * (1.0 - h) - 1.0) / (a * (2.0 * a - 1.0)) - b2,
        ),
        m(
            "uur",
            "r1 beta_* >= r2 [h + b2 (2a-1)]",
            r1 * bl - r2 * (h + b2 * (2.0 * a - 1.0)),
        ),
        m("uud", "d1 >= max(d2, d3)", d1 - d2.max(d3)),
        m("uud", "r1 beta_* >= r3", r1 * bl - r3),
        m("uuud0", "d1 > d3/2", d1 - d3 / 2.0),
        m("uuud0", "d1 = d2", -(d1 - d2).abs()),
        m("uuud0", "d2 <= d3", d3 - d2),
        m("uuud0", "r1 (2 - d3/d1) beta_* >= r3", r1 * (2.0 - d3 / d1) * bl - r3),
    ])
}
