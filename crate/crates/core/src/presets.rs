//! Reference parameter sets used by the examples, tests and shipped configs.

use crate::model::Params;

#[allow(clippy::too_many_arguments)]
fn params(d: [f64; 3], r: [f64; 3], h: f64, k: f64, a: f64, b1: f64, b2: f64) -> Params {
    Params {
        d1: d[0],
        d2: d[1],
        d3: d[2],
        r1: r[0],
        r2: r[1],
        r3: r[2],
        h,
        k,
        a,
        b1,
        b2,
    }
}

/// Strong alien prey invading `E*`; stable tail `E_*`.
pub fn ps_a() -> Params {
    params([0.5, 1.0, 0.5], [0.1, 1.0, 0.5], 0.5, 1.5, 3.0, 1.0, 0.02)
}

/// Couplings of [`ps_a`] with `d1 = d2`, for the critical speed construction.
pub fn ps_a_critical() -> Params {
    params([1.0, 1.0, 1.5], [0.1, 1.0, 0.2], 0.5, 1.5, 3.0, 1.0, 0.02)
}

/// Strong alien prey invading `E*`; stable tail `E_c`.
pub fn ps_b() -> Params {
    params([0.5, 1.0, 0.5], [0.01, 1.0, 0.05], 0.5, 1.1, 3.0, 1.0, 1.3)
}

/// Weak alien prey invading `E_*`; stable tail `E_c`.
pub fn ps_c() -> Params {
    params([1.0, 0.5, 0.5], [0.1, 0.001, 0.005], 0.5, 1.1, 3.0, 1.0, 1.3)
}

/// Couplings of [`ps_c`] with `d1 = d2`, for the critical speed construction.
pub fn ps_c_critical() -> Params {
    params([1.0, 1.0, 1.5], [0.1, 0.001, 0.003], 0.5, 1.1, 3.0, 1.0, 1.3)
}

pub fn by_name(name: &str) -> Option<Params> {
    match name {
        "ps_a" => Some(ps_a()),
        "ps_a_critical" => Some(ps_a_critical()),
        "ps_b" => Some(ps_b()),
        "ps_c" => Some(ps_c()),
        "ps_c_critical" => Some(ps_c_critical()),
        _ => None,
    }
}

pub const NAMES: [&str; 5] = ["ps_a", "ps_a_critical", "ps_b", "ps_c", "ps_c_critical"];
