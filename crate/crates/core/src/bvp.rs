//! Wave profiles as solutions of a two-point boundary-value problem.
//!
//! The profile equations `d_i phi_i'' - s phi_i' + f_i(phi) = 0` are
//! discretised with centred differences on `[z_min, z_max]`, the end values
//! pinned to the two tail states except the alien species at the left end.
//! Both of its linear modes decay there, so no end condition can pick the
//! wave out; its place is taken by the condition that the alien takes its
//! mid value at `z = 0`, which also fixes the translation. Ordering that
//! row next to its unknown keeps the Newton systems banded.

use std::io::Write;

use nalgebra::Matrix3;

use crate::equilibria::{kinetic_jacobian, kinetic_rhs, KineticState};
use crate::error::{Error, Result};
use crate::model::{derive, speed_regime, Params, SpeedRegime};
use crate::pde::{front_position, run, FieldState, Grid, SimConfig, Species};
use crate::waves_analytic::{eval_ul, ULConstruction};

pub const DEFAULT_Z_MIN: f64 = -150.0;
pub const DEFAULT_Z_MAX: f64 = 150.0;
pub const DEFAULT_NODES: usize = 3001;
pub const NEWTON_TOL: f64 = 1e-8;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
const MIN_DAMPING: f64 = 1.0 / 1024.0;

/// Discrete wave profile on a uniform grid in the wave coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveProfile {
    pub s: f64,
    pub z: Vec<f64>,
    pub phi: [Vec<f64>; 3],
    /// State as `z -> -inf` (the invaded state).
    pub left_state: KineticState,
    /// State as `z -> +inf`.
    pub right_state: KineticState,
}

impl WaveProfile {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn h(&self) -> f64 {
        (self.z[self.z.len() - 1] - self.z[0]) / (self.z.len() - 1) as f64
    }

    pub fn at(&self, j: usize) -> KineticState {
        KineticState::new(self.phi[0][j], self.phi[1][j], self.phi[2][j])
    }

    /// Piecewise-linear interpolation, constant beyond the ends.
    pub fn sample(&self, z: f64) -> KineticState {
        let n = self.len();
        let (z0, h) = (self.z[0], self.h());
        let t = ((z - z0) / h).clamp(0.0, (n - 1) as f64);
        let j = (t.floor() as usize).min(n - 2);
        let a = t - j as f64;
        let v = |c: usize| (1.0 - a) * self.phi[c][j] + a * self.phi[c][j + 1];
        KineticState::new(v(0), v(1), v(2))
    }

    /// `max_i |phi_i(end) - target_i|` over both ends.
    pub fn endpoint_mismatch(&self) -> f64 {
        let n = self.len();
        self.at(0)
            .max_dist(&self.left_state)
            .max(self.at(n - 1).max_dist(&self.right_state))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "z,phi1,phi2,phi3")?;
        for j in 0..self.len() {
            writeln!(
                out,
                "{:.15e},{:.15e},{:.15e},{:.15e}",
                self.z[j], self.phi[0][j], self.phi[1][j], self.phi[2][j]
            )?;
        }
        Ok(())
    }

    /// Smooth monotone guess joining the two states around `z = 0`.
    pub fn tanh(
        s: f64,
        left: KineticState,
        right: KineticState,
        z_min: f64,
        z_max: f64,
        m: usize,
        width: f64,
    ) -> Self {
        let z = uniform(z_min, z_max, m);
        let (l, r) = (left.to_array(), right.to_array());
        let phi = [0, 1, 2].map(|c| {
            z.iter()
                .map(|&z| l[c] + (r[c] - l[c]) * 0.5 * (1.0 + (z / width).tanh()))
                .collect()
        });
        WaveProfile {
            s,
            z,
            phi,
            left_state: left,
            right_state: right,
        }
    }

    /// Straight line between the two states.
    pub fn linear(s: f64, left: KineticState, right: KineticState, z_min: f64, z_max: f64, m: usize) -> Self {
        let z = uniform(z_min, z_max, m);
        let (l, r) = (left.to_array(), right.to_array());
        let phi = [0, 1, 2].map(|c| {
            z.iter()
                .map(|&zz| l[c] + (r[c] - l[c]) * (zz - z_min) / (z_max - z_min))
                .collect()
        });
        WaveProfile {
            s,
            z,
            phi,
            left_state: left,
            right_state: right,
        }
    }

    /// Profile read off a simulated field whose front moves towards larger
    /// `x`: `phi(z) = field(x_front - z)`, with `x_front` the crossing of
    /// `level` by `species`. Points outside the simulated interval take the
    /// tail states.
    #[allow(clippy::too_many_arguments)]
    pub fn from_field(
        st: &FieldState,
        g: &Grid,
        species: Species,
        level: f64,
        s: f64,
        left: KineticState,
        right: KineticState,
        z_min: f64,
        z_max: f64,
        m: usize,
    ) -> Result<Self> {
        let xf = front_position(g, st.field(species), level).ok_or(Error::NoFront)?;
        let z = uniform(z_min, z_max, m);
        let dx = g.dx();
        let mut phi = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
        let (l, r) = (left.to_array(), right.to_array());
        for (j, &zz) in z.iter().enumerate() {
            let x = xf - zz;
            for c in 0..3 {
                phi[c][j] = if x > g.x_max {
                    l[c]
                } else if x < g.x_min {
                    r[c]
                } else {
                    let t = ((x - g.x_min) / dx).min((g.n - 1) as f64);
                    let i = (t.floor() as usize).min(g.n - 2);
                    let a = t - i as f64;
                    let f = [&st.u, &st.v, &st.w][c];
                    (1.0 - a) * f[i] + a * f[i + 1]
                };
            }
        }
        for c in 0..3 {
            phi[c][0] = l[c];
            phi[c][m - 1] = r[c];
        }
        Ok(WaveProfile {
            s,
            z,
            phi,
            left_state: left,
            right_state: right,
        })
    }
}

fn uniform(a: f64, b: f64, m: usize) -> Vec<f64> {
    let h = (b - a) / (m - 1) as f64;
    (0..m).map(|j| if j + 1 == m { b } else { a + h * j as f64 }).collect()
}

/// Discrete residual at the interior nodes, with the end values taken from
/// the arrays. Returns the vector (node-major, three per node) and its
/// max-norm.
pub fn residual(wp: &WaveProfile, p: &Params) -> (Vec<f64>, f64) {
    let m = wp.len();
    let h = wp.h();
    let d = p.diffusivities();
    let mut out = Vec::with_capacity(3 * m.saturating_sub(2));
    let mut norm: f64 = 0.0;
    for j in 1..m - 1 {
        let f = kinetic_rhs(&wp.at(j), p);
        for c in 0..3 {
            let y = &wp.phi[c];
            let r = d[c] * (y[j + 1] - 2.0 * y[j] + y[j - 1]) / (h * h)
                - wp.s * (y[j + 1] - y[j - 1]) / (2.0 * h)
                + f[c];
            norm = norm.max(r.abs());
            out.push(r);
        }
    }
    (out, norm)
}

/// Starting guess for [`solve_profile`].
#[derive(Debug, Clone)]
pub enum ProfileInit {
    Tanh { width: f64 },
    Profile(WaveProfile),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpOptions {
    pub z_min: f64,
    pub z_max: f64,
    pub m: usize,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            z_min: DEFAULT_Z_MIN,
            z_max: DEFAULT_Z_MAX,
            m: DEFAULT_NODES,
            tol: NEWTON_TOL,
            max_iterations: MAX_NEWTON_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub damping: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvpSolution {
    pub profile: WaveProfile,
    pub iterations: usize,
    /// Max-norm of [`residual`] at the solution.
    pub residual: f64,
    pub phase_species: Species,
    pub log: Vec<IterationLog>,
}

impl BvpSolution {
    pub fn write_log<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for l in &self.log {
            writeln!(out, "{} {:.6} {:.6e}", l.iteration, l.damping, l.residual)?;
        }
        Ok(())
    }
}

/// The species fixed at `z = 0`: the one absent from the left state and
/// present in the right one, else the one changing most.
pub fn phase_species(left: &KineticState, right: &KineticState) -> Species {
    let (l, r) = (left.to_array(), right.to_array());
    if let Some(c) = (0..3).find(|&c| l[c] == 0.0 && r[c] > 0.0) {
        return Species::ALL[c];
    }
    let c = (0..3)
        .max_by(|&a, &b| (r[a] - l[a]).abs().total_cmp(&(r[b] - l[b]).abs()))
        .unwrap();
    Species::ALL[c]
}

/// Row of a sparse matrix holding the contiguous columns `start..start+len`.
#[derive(Clone)]
struct Row {
    start: usize,
    vals: Vec<f64>,
}

impl Row {
    fn get(&self, col: usize) -> f64 {
        if col < self.start {
            0.0
        } else {
            self.vals.get(col - self.start).copied().unwrap_or(0.0)
        }
    }

    fn end(&self) -> usize {
        self.start + self.vals.len()
    }

    /// `self -= l * other` on the columns `from..other.end()`.
    fn axpy(&mut self, l: f64, other: &Row, from: usize) {
        let end = other.end();
        if end > self.end() {
            self.vals.resize(end - self.start, 0.0);
        }
        for col in from.max(other.start)..end {
            self.vals[col - self.start] -= l * other.vals[col - other.start];
        }
    }
}

/// Gaussian elimination with partial pivoting for a banded system with at
/// most `kl` sub-diagonals.
fn solve_banded(mut rows: Vec<Row>, mut rhs: Vec<f64>, kl: usize) -> Option<Vec<f64>> {
    let n = rows.len();
    for k in 0..n {
        let last = (k + kl).min(n - 1);
        let piv = (k..=last).max_by(|&a, &b| rows[a].get(k).abs().total_cmp(&rows[b].get(k).abs()))?;
        let pv = rows[piv].get(k);
        if !(pv.abs() > 0.0) || !pv.is_finite() {
            return None;
        }
        rows.swap(k, piv);
        rhs.swap(k, piv);
        let (head, tail) = rows.split_at_mut(k + 1);
        let pivot_row = &head[k];
        for (off, row) in tail.iter_mut().take(last - k).enumerate() {
            let l = row.get(k) / pv;
            if l != 0.0 {
                row.axpy(l, pivot_row, k);
                rhs[k + 1 + off] -= l * rhs[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let row = &rows[k];
        let mut acc = rhs[k];
        for col in k + 1..row.end() {
            acc -= row.get(col) * x[col];
        }
        x[k] = acc / row.get(k);
    }
    Some(x)
}

/// Position of an equation in the ordered system. Interior equations sit at
/// their own unknown; the alien has no condition at the left end, so rows
/// up to the phase condition are shifted by one.
#[derive(Clone, Copy)]
enum Eq {
    Left(usize),
    Interior(usize, usize),
    Phase,
    Right(usize),
}

struct Problem<'a> {
    p: &'a Params,
    s: f64,
    h: f64,
    m: usize,
    j0: usize,
    /// Alien species index.
    c: usize,
    mid: f64,
    left: [f64; 3],
    right: [f64; 3],
    order: Vec<Eq>,
}

impl<'a> Problem<'a> {
    #[allow(clippy::too_many_arguments)]
    fn new(p: &'a Params, s: f64, h: f64, m: usize, j0: usize, c: usize, mid: f64, left: [f64; 3], right: [f64; 3]) -> Self {
        let mut order = Vec::with_capacity(3 * m);
        for k in (0..3).filter(|&k| k != c) {
            order.push(Eq::Left(k));
        }
        for j in 1..m - 1 {
            for k in 0..3 {
                order.push(Eq::Interior(j, k));
                if j == j0 && k == c {
                    order.push(Eq::Phase);
                }
            }
        }
        for k in 0..3 {
            order.push(Eq::Right(k));
        }
        Problem {
            p,
            s,
            h,
            m,
            j0,
            c,
            mid,
            left,
            right,
            order,
        }
    }

    fn eval(&self, phi: &[Vec<f64>; 3]) -> Vec<f64> {
        let d = self.p.diffusivities();
        let (h, s) = (self.h, self.s);
        let mut f = [0.0; 3];
        let mut fj = usize::MAX;
        self.order
            .iter()
            .map(|eq| match *eq {
                Eq::Left(k) => phi[k][0] - self.left[k],
                Eq::Right(k) => phi[k][self.m - 1] - self.right[k],
                Eq::Phase => phi[self.c][self.j0] - self.mid,
                Eq::Interior(j, k) => {
                    if fj != j {
                        f = kinetic_rhs(&KineticState::new(phi[0][j], phi[1][j], phi[2][j]), self.p);
                        fj = j;
                    }
                    let y = &phi[k];
                    d[k] * (y[j + 1] - 2.0 * y[j] + y[j - 1]) / (h * h) - s * (y[j + 1] - y[j - 1]) / (2.0 * h) + f[k]
                }
            })
            .collect()
    }

    /// Solve `J dx = -r`; `dx` is indexed `3 j + species`.
    fn newton_step(&self, phi: &[Vec<f64>; 3], r: &[f64]) -> Option<Vec<f64>> {
        let d = self.p.diffusivities();
        let (h, s) = (self.h, self.s);
        let unit = |col: usize| Row {
            start: col,
            vals: vec![1.0],
        };
        let mut jf = Matrix3::zeros();
        let mut fj = usize::MAX;
        let mut kl = 0;
        let mut rows = Vec::with_capacity(self.order.len());
        for (pos, eq) in self.order.iter().enumerate() {
            let row = match *eq {
                Eq::Left(k) => unit(k),
                Eq::Right(k) => unit(3 * (self.m - 1) + k),
                Eq::Phase => unit(3 * self.j0 + self.c),
                Eq::Interior(j, k) => {
                    if fj != j {
                        jf = kinetic_jacobian(&KineticState::new(phi[0][j], phi[1][j], phi[2][j]), self.p);
                        fj = j;
                    }
                    let start = 3 * (j - 1);
                    let mut vals = vec![0.0; 9];
                    vals[k] = d[k] / (h * h) + s / (2.0 * h);
                    vals[6 + k] = d[k] / (h * h) - s / (2.0 * h);
                    for b in 0..3 {
                        vals[3 + b] = jf[(k, b)];
                    }
                    vals[3 + k] -= 2.0 * d[k] / (h * h);
                    Row { start, vals }
                }
            };
            kl = kl.max(pos.saturating_sub(row.start));
            rows.push(row);
        }
        solve_banded(rows, r.iter().map(|v| -v).collect(), kl)
    }
}

fn l2(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn max_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |a: f64, v| if v.is_nan() { f64::NAN } else { a.max(v.abs()) })
}

/// Solve for the wave profile joining `left` (as `z -> -inf`) to `right`
/// at speed `s` by damped Newton iteration.
pub fn solve_profile(
    p: &Params,
    s: f64,
    left: KineticState,
    right: KineticState,
    init: &ProfileInit,
    opts: &BvpOptions,
) -> Result<BvpSolution> {
    p.validate()?;
    let dq = derive(p)?;
    for (name, x) in [("left", left), ("right", right)] {
        let f = kinetic_rhs(&x, p);
        if f.iter().any(|v| !(v.abs() <= 1e-10)) {
            return Err(Error::Domain(format!("{name} state is not an equilibrium")));
        }
    }
    let critical = [dq.s_upper, dq.s_lower]
        .into_iter()
        .flatten()
        .any(|sm| speed_regime(s, sm) == SpeedRegime::Critical);
    if critical {
        return Err(Error::HypothesisViolated(
            "critical speeds are outside the supported range".into(),
        ));
    }
    if !(opts.m >= 5 && opts.z_min < 0.0 && opts.z_max > 0.0) {
        return Err(Error::Domain("need m >= 5 and z_min < 0 < z_max".into()));
    }

    let mut wp = match init {
        ProfileInit::Tanh { width } => {
            WaveProfile::tanh(s, left, right, opts.z_min, opts.z_max, opts.m, *width)
        }
        ProfileInit::Profile(seed) => {
            let mut wp = WaveProfile::tanh(s, left, right, opts.z_min, opts.z_max, opts.m, 1.0);
            for j in 1..opts.m - 1 {
                let x = seed.sample(wp.z[j]).to_array();
                for c in 0..3 {
                    wp.phi[c][j] = x[c];
                }
            }
            wp
        }
    };
    let m = wp.len();
    let h = wp.h();
    let j0 = (-opts.z_min / h).round() as usize;
    let sp = phase_species(&left, &right);
    let c = sp.index();
    let mid = 0.5 * (left.to_array()[c] + right.to_array()[c]);
    let prob = Problem::new(p, s, h, m, j0, c, mid, left.to_array(), right.to_array());

    let r0 = prob.eval(&wp.phi);
    let mut norm = max_norm(&r0);
    let mut merit = l2(&r0);
    let mut log = vec![IterationLog {
        iteration: 0,
        damping: 0.0,
        residual: norm,
    }];
    let mut iter = 0;
    while !(norm <= opts.tol) {
        if iter >= opts.max_iterations || !norm.is_finite() {
            return Err(Error::NewtonDivergence {
                iterations: iter,
                residual: norm,
                reason: if norm.is_finite() {
                    "iteration limit reached".into()
                } else {
                    "residual is not finite".into()
                },
            });
        }
        iter += 1;
        let r = prob.eval(&wp.phi);
        let dx = prob.newton_step(&wp.phi, &r).ok_or_else(|| Error::NewtonDivergence {
            iterations: iter,
            residual: norm,
            reason: "singular Jacobian".into(),
        })?;
        let mut alpha = 1.0;
        let mut trial = wp.phi.clone();
        loop {
            for j in 0..m {
                for cc in 0..3 {
                    trial[cc][j] = wp.phi[cc][j] + alpha * dx[3 * j + cc];
                }
            }
            let tr = prob.eval(&trial);
            let tm = l2(&tr);
            if tm.is_finite() && tm <= (1.0 - 1e-4 * alpha) * merit {
                std::mem::swap(&mut wp.phi, &mut trial);
                norm = max_norm(&tr);
                merit = tm;
                break;
            }
            alpha *= 0.5;
            if alpha < MIN_DAMPING {
                return Err(Error::NewtonDivergence {
                    iterations: iter,
                    residual: norm,
                    reason: "line search failed".into(),
                });
            }
        }
        log.push(IterationLog {
            iteration: iter,
            damping: alpha,
            residual: norm,
        });
    }

    for (cc, name) in ["phi1", "phi2", "phi3"].into_iter().enumerate() {
        if let Some(j) = (1..m - 1).find(|&j| wp.phi[cc][j] <= 0.0) {
            return Err(Error::NonPositiveProfile {
                component: name,
                value: wp.phi[cc][j],
                z: wp.z[j],
            });
        }
    }
    let (_, res) = residual(&wp, p);
    Ok(BvpSolution {
        profile: wp,
        iterations: iter,
        residual: res,
        phase_species: sp,
        log,
    })
}


/// Starting profile read off a simulation: runs `cfg` and places the
/// crossing of the phase species' mid level at `z = 0`.
pub fn seed_from_pde(p: &Params, cfg: &SimConfig, s: f64, opts: &BvpOptions) -> Result<WaveProfile> {
    let out = run(p, cfg)?;
    let left = cfg.scenario.background(p)?;
    let right = cfg.scenario.expected_tail(p)?;
    let sp = phase_species(&left, &right);
    let level = 0.5 * (Species::of(&left, sp) + Species::of(&right, sp));
    WaveProfile::from_field(&out.terminal, &cfg.grid, sp, level, s, left, right, opts.z_min, opts.z_max, opts.m)
}

/// Largest amount by which the profile leaves the band between the lower
/// and upper profiles of `c` shifted by `shift`, over the interior nodes:
/// `max_i max(lower_i(z + shift) - phi_i(z), phi_i(z) - upper_i(z + shift), 0)`.
pub fn sandwich_violation(wp: &WaveProfile, c: &ULConstruction, shift: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 1..wp.len() - 1 {
        let b = eval_ul(c, wp.z[j] + shift);
        for i in 0..3 {
            let y = wp.phi[i][j];
            let v = (b.lower[i] - y).max(y - b.upper[i]);
            if v.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(v);
        }
    }
    worst
}

/// Shift in `[-range, range]` minimising [`sandwich_violation`], found on
/// successively finer grids; returns `(shift, violation)`.
pub fn align_sandwich(wp: &WaveProfile, c: &ULConstruction, range: f64) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY);
    let (mut lo, mut hi, mut step) = (-range, range, 0.05);
    for _ in 0..4 {
        let n = ((hi - lo) / step).round() as usize;
        for k in 0..=n {
            let t = lo + step * k as f64;
            let v = sandwich_violation(wp, c, t);
            if v < best.1 {
                best = (t, v);
            }
        }
        lo = best.0 - step;
        hi = best.0 + step;
        step /= 40.0;
    }
    best
}

/// Profiles along a monotone sequence of speeds from `s_from` to `s_to`.
#[derive(Debug)]
pub struct Continuation {
    pub family: Vec<BvpSolution>,
    pub last_good: f64,
    /// Speed and error of the first failed solve, if any.
    pub failure: Option<(f64, Error)>,
}

/// Walk from `s_from` to `s_to` in `n_steps` equal steps, warm-starting each
/// solve from the previous profile, and stop at the first failure.
pub fn continue_in_speed(
    p: &Params,
    s_from: f64,
    s_to: f64,
    n_steps: usize,
    seed: &WaveProfile,
    opts: &BvpOptions,
) -> Result<Continuation> {
    let (left, right) = (seed.left_state, seed.right_state);
    let first = solve_profile(p, s_from, left, right, &ProfileInit::Profile(seed.clone()), opts)?;
    let mut family = vec![first];
    let mut failure = None;
    let n = n_steps.max(1);
    if s_from != s_to {
        for i in 1..=n {
            let s = if i == n {
                s_to
            } else {
                s_from + (s_to - s_from) * i as f64 / n as f64
            };
            let prev = family.last().unwrap().profile.clone();
            match solve_profile(p, s, left, right, &ProfileInit::Profile(prev), opts) {
                Ok(sol) => family.push(sol),
                Err(e) => {
                    failure = Some((s, e));
                    break;
                }
            }
        }
    }
    let last_good = family.last().unwrap().profile.s;
    Ok(Continuation {
        family,
        last_good,
        failure,
    })
}
