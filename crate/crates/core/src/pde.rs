//! Method-of-lines simulation of the reaction-diffusion system on a bounded
//! interval with zero-flux ends: classical Runge-Kutta in time, centred
//! second differences in space. Also front tracking, speed fitting and
//! classification of the state left behind the front.
//!
//! Waves are launched at the left end and travel to the right, so the
//! invaded state sits at large `x`.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::Config;
use crate::equilibria::{kinetic_rhs, KineticState};
use crate::error::{Error, Result};
use crate::model::{check_conditions, derive, Params, StableTail};

pub const DEFAULT_CFL: f64 = 0.2;
pub const DEFAULT_FIT_START_FRAC: f64 = 0.4;
pub const DEFAULT_LEVEL_FRAC: f64 = 0.5;
pub const DEFAULT_TAIL_TOL: f64 = 1e-2;
/// Smallest allowed distance, in grid cells, between a front and `x_max`.
pub const BOUNDARY_MARGIN_CELLS: f64 = 50.0;
pub const MIN_FIT_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 3 || !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Domain(format!(
                "grid needs n >= 3 and x_min < x_max, got n = {n}, [{x_min}, {x_max}]"
            )));
        }
        Ok(Grid { x_min, x_max, n })
    }

    /// Grid with spacing as close to `dx` as the interval allows.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::Domain(format!("dx must be positive, got {dx}")));
        }
        let cells = ((x_max - x_min) / dx).round().max(2.0) as usize;
        Grid::new(x_min, x_max, cells + 1)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl FieldState {
    pub fn constant(n: usize, x: KineticState) -> Self {
        FieldState {
            t: 0.0,
            u: vec![x.u; n],
            v: vec![x.v; n],
            w: vec![x.w; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn field(&self, sp: Species) -> &[f64] {
        match sp {
            Species::U => &self.u,
            Species::V => &self.v,
            Species::W => &self.w,
        }
    }

    pub fn at(&self, i: usize) -> KineticState {
        KineticState::new(self.u[i], self.v[i], self.w[i])
    }

    pub fn min_value(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .chain(&self.w)
            .fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn max_value(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .chain(&self.w)
            .fold(f64::NEG_INFINITY, |m, &x| m.max(x))
    }

    pub fn write_csv<W: Write>(&self, g: &Grid, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,u,v,w")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:.15e},{:.15e},{:.15e},{:.15e}",
                g.x(i),
                self.u[i],
                self.v[i],
                self.w[i]
            )?;
        }
        Ok(())
    }

    /// Write `snap_t<time>.csv` into `dir` and return its path.
    pub fn write_snapshot(&self, g: &Grid, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(snapshot_name(self.t));
        let f = std::fs::File::create(&path)?;
        self.write_csv(g, std::io::BufWriter::new(f))?;
        Ok(path)
    }
}

pub fn snapshot_name(t: f64) -> String {
    format!("snap_t{t:.3}.csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Species {
    U,
    V,
    W,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::U, Species::V, Species::W];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn of(x: &KineticState, sp: Species) -> f64 {
        x.to_array()[sp.index()]
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Species::U => "u",
            Species::V => "v",
            Species::W => "w",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioKind {
    /// Background `E*`, the strong prey `v` introduced at the left end.
    InvadeEStar,
    /// Background `E_*`, the weak prey `u` introduced at the left end.
    InvadeELow,
    /// Arbitrary background and perturbed species.
    Custom {
        background: KineticState,
        alien: Species,
        target: KineticState,
    },
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::InvadeEStar => "invade-estar",
            ScenarioKind::InvadeELow => "invade-elow",
            ScenarioKind::Custom { .. } => "custom",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "invade-estar" => Ok(ScenarioKind::InvadeEStar),
            "invade-elow" => Ok(ScenarioKind::InvadeELow),
            "custom" => Err(Error::Config(
                "the custom scenario has no config form; build it through the library".into(),
            )),
            _ => Err(Error::Config(format!("unknown scenario `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub amplitude: f64,
    pub width: f64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, amplitude: f64, width: f64) -> Self {
        Scenario {
            kind,
            amplitude,
            width,
        }
    }

    pub fn alien(&self) -> Species {
        match self.kind {
            ScenarioKind::InvadeEStar => Species::V,
            ScenarioKind::InvadeELow => Species::U,
            ScenarioKind::Custom { alien, .. } => alien,
        }
    }

    /// The invaded state.
    pub fn background(&self, p: &Params) -> Result<KineticState> {
        let dq = derive(p)?;
        match self.kind {
            ScenarioKind::InvadeEStar => {
                if dq.beta_upper <= 0.0 {
                    return Err(Error::HypothesisViolated("beta*>0".into()));
                }
                Ok(dq.e_upper())
            }
            ScenarioKind::InvadeELow => {
                if dq.beta_lower <= 0.0 {
                    return Err(Error::HypothesisViolated("beta_*>0".into()));
                }
                Ok(dq.e_lower())
            }
            ScenarioKind::Custom { background, .. } => Ok(background),
        }
    }

    /// The state expected behind the front: the tail predicted by the
    /// existence results when they apply, otherwise `E_c` if it exists and
    /// the other semi-co-existence state if not.
    pub fn expected_tail(&self, p: &Params) -> Result<KineticState> {
        let dq = derive(p)?;
        let rep = check_conditions(p, None)?;
        Ok(match self.kind {
            ScenarioKind::InvadeEStar => match (rep.thm_sc1_applicable(), dq.ec) {
                (Some(StableTail::Semi), _) | (None, None) => dq.e_lower(),
                (_, Some(ec)) => ec,
                (Some(StableTail::Coexist), None) => unreachable!("co-existence tail needs Ec"),
            },
            ScenarioKind::InvadeELow => dq.ec.unwrap_or_else(|| dq.e_upper()),
            ScenarioKind::Custom { target, .. } => target,
        })
    }
}

/// Everything a simulation run needs besides the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub scenario: Scenario,
    pub cfl_factor: f64,
    pub t_end: f64,
    pub sample_every: f64,
    pub level_frac: f64,
    pub fit_start_frac: f64,
    /// Keep a copy of the fields at every sample time.
    pub keep_snapshots: bool,
}

impl SimConfig {
    /// Read the simulation keys. `scenario_override` replaces the
    /// `scenario` key when given.
    pub fn from_config(cfg: &Config, scenario_override: Option<&str>) -> Result<Self> {
        let kind: ScenarioKind = match scenario_override.or(cfg.get("scenario")) {
            Some(s) => s.parse()?,
            None => return Err(Error::Config("missing required key `scenario`".into())),
        };
        let num = |k: &str, d: f64| -> Result<f64> { Ok(cfg.number(k)?.unwrap_or(d)) };
        let x_min = num("x_min", 0.0)?;
        let x_max = num("x_max", 400.0)?;
        let dx = num("dx", 0.2)?;
        let grid = Grid::with_spacing(x_min, x_max, dx).map_err(|e| Error::Config(e.to_string()))?;
        let sc = SimConfig {
            grid,
            scenario: Scenario::new(kind, num("amplitude", 0.1)?, num("width", 5.0)?),
            cfl_factor: num("cfl_factor", DEFAULT_CFL)?,
            t_end: num("t_end", 150.0)?,
            sample_every: num("sample_every", 1.0)?,
            level_frac: num("level_frac", DEFAULT_LEVEL_FRAC)?,
            fit_start_frac: num("fit_start_frac", DEFAULT_FIT_START_FRAC)?,
            keep_snapshots: false,
        };
        sc.check().map_err(|e| Error::Config(e.to_string()))?;
        Ok(sc)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if !(self.scenario.amplitude >= 0.0) || !(self.scenario.width > 0.0) {
            return bad("amplitude must be >= 0 and width > 0".into());
        }
        if !(self.cfl_factor > 0.0 && self.cfl_factor <= 0.5) {
            return bad(format!("cfl_factor must lie in (0, 0.5], got {}", self.cfl_factor));
        }
        if !(self.t_end >= 0.0) || !(self.sample_every > 0.0) {
            return bad("t_end must be >= 0 and sample_every > 0".into());
        }
        if !(self.level_frac > 0.0 && self.level_frac < 1.0) {
            return bad(format!("level_frac must lie in (0, 1), got {}", self.level_frac));
        }
        if !(0.0..1.0).contains(&self.fit_start_frac) {
            return bad(format!("fit_start_frac must lie in [0, 1), got {}", self.fit_start_frac));
        }
        Ok(())
    }

    pub fn dt(&self, p: &Params) -> f64 {
        stable_dt(&self.grid, p, self.cfl_factor)
    }
}

/// `cfl_factor dx^2 / max(d)`.
pub fn stable_dt(g: &Grid, p: &Params, cfl_factor: f64) -> f64 {
    cfl_factor * g.dx() * g.dx() / p.max_diffusivity()
}

/// Background state everywhere plus `amplitude exp(-((x - x_min)/width)^2)`
/// in the alien species.
pub fn init_state(g: &Grid, p: &Params, sc: &Scenario) -> Result<FieldState> {
    if !(sc.amplitude >= 0.0 && sc.width > 0.0) {
        return Err(Error::Domain("amplitude must be >= 0 and width > 0".into()));
    }
    let bg = sc.background(p)?;
    let mut st = FieldState::constant(g.n, bg);
    let f = match sc.alien() {
        Species::U => &mut st.u,
        Species::V => &mut st.v,
        Species::W => &mut st.w,
    };
    for (i, x) in f.iter_mut().enumerate() {
        let y = (g.x(i) - g.x_min) / sc.width;
        *x += sc.amplitude * (-y * y).exp();
    }
    Ok(st)
}

/// Explicit integrator holding its work buffers. The state is stored as one
/// array `[u..., v..., w...]`.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub grid: Grid,
    pub params: Params,
    pub dt: f64,
    t: f64,
    y: Vec<f64>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    blow_up: f64,
}

impl Simulator {
    pub fn new(grid: Grid, params: Params, state: &FieldState, dt: f64, cfl_factor: f64) -> Result<Self> {
        params.validate()?;
        if state.u.len() != grid.n || state.v.len() != grid.n || state.w.len() != grid.n {
            return Err(Error::Domain("state length does not match the grid".into()));
        }
        let limit = stable_dt(&grid, &params, cfl_factor);
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, limit });
        }
        let n = grid.n;
        let mut y = Vec::with_capacity(3 * n);
        y.extend_from_slice(&state.u);
        y.extend_from_slice(&state.v);
        y.extend_from_slice(&state.w);
        Ok(Simulator {
            grid,
            params,
            dt,
            t: state.t,
            y,
            k: std::array::from_fn(|_| vec![0.0; 3 * n]),
            tmp: vec![0.0; 3 * n],
            blow_up: 10.0 * params.density_cap(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> FieldState {
        let n = self.grid.n;
        FieldState {
            t: self.t,
            u: self.y[..n].to_vec(),
            v: self.y[n..2 * n].to_vec(),
            w: self.y[2 * n..].to_vec(),
        }
    }

    /// Advance by `h <= dt`.
    pub fn step_by(&mut self, h: f64) -> Result<()> {
        let [k1, k2, k3, k4] = &mut self.k;
        let (g, p) = (&self.grid, &self.params);
        semi_discrete_rhs(g, p, &self.y, k1);
        axpy(&mut self.tmp, &self.y, 0.5 * h, k1);
        semi_discrete_rhs(g, p, &self.tmp, k2);
        axpy(&mut self.tmp, &self.y, 0.5 * h, k2);
        semi_discrete_rhs(g, p, &self.tmp, k3);
        axpy(&mut self.tmp, &self.y, h, k3);
        semi_discrete_rhs(g, p, &self.tmp, k4);
        let c = h / 6.0;
        for i in 0..self.y.len() {
            self.y[i] += c * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        self.t += h;
        if let Some(&bad) = self.y.iter().find(|x| !(x.abs() <= self.blow_up)) {
            return Err(Error::BlowUp {
                t: self.t,
                value: bad.abs(),
            });
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<()> {
        self.step_by(self.dt)
    }
}

fn axpy(out: &mut [f64], y: &[f64], h: f64, k: &[f64]) {
    for ((o, a), b) in out.iter_mut().zip(y).zip(k) {
        *o = a + h * b;
    }
}

/// Right-hand side of the semi-discrete system, mirrored ghost nodes at
/// both ends.
fn semi_discrete_rhs(g: &Grid, p: &Params, y: &[f64], out: &mut [f64]) {
    let n = g.n;
    let inv = 1.0 / (g.dx() * g.dx());
    let d = p.diffusivities();
    let (u, rest) = y.split_at(n);
    let (v, w) = rest.split_at(n);
    let (ou, rest) = out.split_at_mut(n);
    let (ov, ow) = rest.split_at_mut(n);
    for i in 0..n {
        let f = kinetic_rhs(&KineticState::new(u[i], v[i], w[i]), p);
        ou[i] = f[0];
        ov[i] = f[1];
        ow[i] = f[2];
    }
    for (c, (f, o)) in [(u, &mut *ou), (v, &mut *ov), (w, &mut *ow)].into_iter().enumerate() {
        let di = d[c] * inv;
        o[0] += di * 2.0 * (f[1] - f[0]);
        for i in 1..n - 1 {
            o[i] += di * (f[i - 1] - 2.0 * f[i] + f[i + 1]);
        }
        o[n - 1] += di * 2.0 * (f[n - 2] - f[n - 1]);
    }
}

/// One Runge-Kutta step of the semi-discrete system.
pub fn step(st: &FieldState, g: &Grid, p: &Params, dt: f64, cfl_factor: f64) -> Result<FieldState> {
    let mut sim = Simulator::new(*g, *p, st, dt, cfl_factor)?;
    sim.step()?;
    Ok(sim.state())
}

/// Rightmost `x` where `field` crosses `level`, linearly interpolated.
pub fn front_position(g: &Grid, field: &[f64], level: f64) -> Option<f64> {
    (0..field.len().saturating_sub(1)).rev().find_map(|i| {
        let (a, b) = (field[i], field[i + 1]);
        if (a >= level) != (b >= level) {
            Some(g.x(i) + (level - a) / (b - a) * (g.x(i + 1) - g.x(i)))
        } else {
            None
        }
    })
}

/// Front positions of one species over time.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontSeries {
    pub species: Species,
    pub level: f64,
    pub points: Vec<(f64, Option<f64>)>,
}

impl FrontSeries {
    pub fn detected(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().filter_map(|&(t, x)| x.map(|x| (t, x)))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,front_x")?;
        for (t, x) in self.detected() {
            writeln!(out, "{t:.15e},{x:.15e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedEstimate {
    pub species: Species,
    pub level: f64,
    pub speed: f64,
    /// Root-mean-square deviation from the fitted line.
    pub residual: f64,
    /// Time window of the fit.
    pub window: (f64, f64),
    pub points: usize,
}

/// Least-squares slope of the front position over the samples after the
/// first `fit_start_frac` of the recorded time span.
pub fn estimate_speed(series: &FrontSeries, fit_start_frac: f64) -> Result<SpeedEstimate> {
    let (t_first, t_last) = match (series.points.first(), series.points.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Err(Error::InsufficientData { have: 0, need: MIN_FIT_POINTS }),
    };
    let t0 = t_first + fit_start_frac * (t_last - t_first);
    let pts: Vec<(f64, f64)> = series.detected().filter(|&(t, _)| t >= t0).collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            have: pts.len(),
            need: MIN_FIT_POINTS,
        });
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let xm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let stx: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - xm)).sum();
    let speed = stx / stt;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - xm - speed * (p.0 - tm)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SpeedEstimate {
        species: series.species,
        level: series.level,
        speed,
        residual,
        window: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailKind {
    EStar,
    ELow,
    Ec,
    Unresolved,
}

impl fmt::Display for TailKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailKind::EStar => "EStar",
            TailKind::ELow => "ELow",
            TailKind::Ec => "Ec",
            TailKind::Unresolved => "Unresolved",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailClass {
    pub kind: TailKind,
    /// Window average of `(u, v, w)`.
    pub mean: KineticState,
    /// Largest componentwise distance from the nearest candidate state.
    pub deviation: f64,
    pub nearest: TailKind,
    pub window: (f64, f64),
}

/// Average the fields over `window` and compare with `E*`, `E_*` and `E_c`.
pub fn tail_classify(
    st: &FieldState,
    g: &Grid,
    window: (f64, f64),
    p: &Params,
    tol: f64,
) -> Result<TailClass> {
    let (a, b) = window;
    if !(a >= g.x_min && b <= g.x_max && a < b) {
        return Err(Error::Domain(format!(
            "tail window [{a}, {b}] is not inside [{}, {}]",
            g.x_min, g.x_max
        )));
    }
    let idx: Vec<usize> = (0..g.n).filter(|&i| g.x(i) >= a && g.x(i) <= b).collect();
    if idx.is_empty() {
        return Err(Error::Domain("tail window contains no nodes".into()));
    }
    let m = idx.len() as f64;
    let mean = KineticState::new(
        idx.iter().map(|&i| st.u[i]).sum::<f64>() / m,
        idx.iter().map(|&i| st.v[i]).sum::<f64>() / m,
        idx.iter().map(|&i| st.w[i]).sum::<f64>() / m,
    );
    let dq = derive(p)?;
    let mut candidates = vec![(TailKind::EStar, dq.e_upper()), (TailKind::ELow, dq.e_lower())];
    if let Some(ec) = dq.ec {
        candidates.push((TailKind::Ec, ec));
    }
    let (nearest, deviation) = candidates
        .iter()
        .map(|(k, x)| (*k, mean.max_dist(x)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("at least two candidates");
    Ok(TailClass {
        kind: if deviation <= tol { nearest } else { TailKind::Unresolved },
        mean,
        deviation,
        nearest,
        window,
    })
}

/// Default tail window: the quarter of the invaded region next to `x_min`,
/// which has been behind the front the longest.
pub fn tail_window(g: &Grid, front: f64) -> (f64, f64) {
    (g.x_min, g.x_min + 0.25 * (front - g.x_min))
}

/// Classify the state behind the front of `species` at `level`.
pub fn tail_behind_front(
    st: &FieldState,
    g: &Grid,
    species: Species,
    level: f64,
    p: &Params,
    tol: f64,
) -> Result<TailClass> {
    let front = front_position(g, st.field(species), level).ok_or(Error::NoFront)?;
    tail_classify(st, g, tail_window(g, front), p, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// One series per species, levels halfway (by `level_frac`) between
    /// the background and the expected tail. Species whose two values
    /// coincide have no series.
    pub fronts: Vec<FrontSeries>,
    pub alien: Species,
    pub terminal: FieldState,
    pub snapshots: Vec<FieldState>,
    pub min_value: f64,
    pub max_value: f64,
    pub dt: f64,
}

impl RunOutput {
    pub fn alien_front(&self) -> &FrontSeries {
        self.fronts
            .iter()
            .find(|f| f.species == self.alien)
            .expect("the alien species always has a front series")
    }

    pub fn speed(&self, fit_start_frac: f64) -> Result<SpeedEstimate> {
        estimate_speed(self.alien_front(), fit_start_frac)
    }

    pub fn tail(&self, g: &Grid, p: &Params, tol: f64) -> Result<TailClass> {
        let f = self.alien_front();
        tail_behind_front(&self.terminal, g, f.species, f.level, p, tol)
    }
}

/// Simulate from the scenario's initial data to `cfg.t_end`. Fails if any
/// tracked front comes within 50 cells of `x_max`.
pub fn run(p: &Params, cfg: &SimConfig) -> Result<RunOutput> {
    cfg.check()?;
    let g = cfg.grid;
    let st = init_state(&g, p, &cfg.scenario)?;
    let bg = cfg.scenario.background(p)?;
    let target = cfg.scenario.expected_tail(p)?;
    run_from(p, cfg, st, bg, target)
}

/// Like [`run`] from a given initial state; `bg` and `target` set the front
/// levels.
pub fn run_from(
    p: &Params,
    cfg: &SimConfig,
    init: FieldState,
    bg: KineticState,
    target: KineticState,
) -> Result<RunOutput> {
    let g = cfg.grid;
    let dt = cfg.dt(p);
    let mut sim = Simulator::new(g, *p, &init, dt, cfg.cfl_factor)?;
    let alien = cfg.scenario.alien();

    let mut fronts: Vec<FrontSeries> = Species::ALL
        .into_iter()
        .filter_map(|sp| {
            let (b, t) = (Species::of(&bg, sp), Species::of(&target, sp));
            (sp == alien || (t - b).abs() > 1e-9).then(|| FrontSeries {
                species: sp,
                level: b + cfg.level_frac * (t - b),
                points: Vec::new(),
            })
        })
        .collect();

    let margin = BOUNDARY_MARGIN_CELLS * g.dx();
    let mut snapshots = Vec::new();
    let mut min_value = init.min_value();
    let mut max_value = init.max_value();

    let stride = ((cfg.sample_every / dt).round() as usize).max(1);
    let n_steps = (cfg.t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let t0 = init.t;

    let mut record = |st: &FieldState, fronts: &mut Vec<FrontSeries>| -> Result<()> {
        for f in fronts.iter_mut() {
            let x = front_position(&g, st.field(f.species), f.level);
            if f.species == alien {
                if let Some(x) = x {
                    if x > g.x_max - margin {
                        return Err(Error::FrontNearBoundary {
                            front: x,
                            margin,
                            x_max: g.x_max,
                        });
                    }
                }
            }
            f.points.push((st.t, x));
        }
        if cfg.keep_snapshots {
            snapshots.push(st.clone());
        }
        Ok(())
    };
    record(&init, &mut fronts)?;

    for i in 1..=n_steps {
        let h = dt.min(t0 + cfg.t_end - sim.t());
        sim.step_by(h)?;
        if i == n_steps {
            sim.t = t0 + cfg.t_end;
        }
        let (lo, hi) = sim.y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        min_value = min_value.min(lo);
        max_value = max_value.max(hi);
        if i % stride == 0 || i == n_steps {
            record(&sim.state(), &mut fronts)?;
        }
    }

    Ok(RunOutput {
        fronts,
        alien,
        terminal: sim.state(),
        snapshots,
        min_value,
        max_value,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn small_cfg(kind: ScenarioKind) -> SimConfig {
        SimConfig {
            grid: Grid::with_spacing(0.0, 100.0, 0.5).unwrap(),
            scenario: Scenario::new(kind, 0.1, 5.0),
            cfl_factor: DEFAULT_CFL,
            t_end: 5.0,
            sample_every: 0.5,
            level_frac: 0.5,
            fit_start_frac: 0.4,
            keep_snapshots: false,
        }
    }

    #[test]
    fn init_estar() {
        let p = presets::ps_a();
        let g = Grid::with_spacing(0.0, 100.0, 0.5).unwrap();
        let st = init_state(&g, &p, &Scenario::new(ScenarioKind::InvadeEStar, 0.1, 5.0)).unwrap();
        assert!(st.u.iter().all(|&x| x == 0.5));
        assert!(st.w.iter().all(|&x| x == 0.5));
        assert_eq!(st.v[0], 0.1);
        assert!(st.v.iter().all(|&x| x <= 0.1));
    }

    #[test]
    fn init_elow_ps_c() {
        let p = presets::ps_c();
        let g = Grid::with_spacing(0.0, 100.0, 0.5).unwrap();
        let st = init_state(&g, &p, &Scenario::new(ScenarioKind::InvadeELow, 0.1, 5.0)).unwrap();
        assert!((st.v[50] - 0.469388).abs() < 1e-6);
        assert!((st.w[50] - 0.408163).abs() < 1e-6);
        assert_eq!(st.u[0], 0.1);
    }

    #[test]
    fn init_requires_invadable_background() {
        let g = Grid::with_spacing(0.0, 10.0, 0.5).unwrap();
        let r = init_state(&g, &presets::ps_a(), &Scenario::new(ScenarioKind::InvadeELow, 0.1, 5.0));
        assert!(matches!(r, Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn equilibrium_is_preserved() {
        let p = presets::ps_a();
        let g = Grid::with_spacing(0.0, 50.0, 0.5).unwrap();
        let e = derive(&p).unwrap().e_upper();
        let st = FieldState::constant(g.n, e);
        let dt = stable_dt(&g, &p, DEFAULT_CFL);
        let next = step(&st, &g, &p, dt, DEFAULT_CFL).unwrap();
        for i in 0..g.n {
            assert!(next.at(i).max_dist(&e) < 1e-13);
        }
    }

    #[test]
    fn cfl_is_enforced() {
        let p = presets::ps_a();
        let g = Grid::with_spacing(0.0, 50.0, 0.5).unwrap();
        let st = FieldState::constant(g.n, KineticState::new(0.5, 0.0, 0.5));
        let dt = 2.0 * stable_dt(&g, &p, DEFAULT_CFL);
        assert!(matches!(
            step(&st, &g, &p, dt, DEFAULT_CFL),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn blow_up_is_reported() {
        let p = presets::ps_a();
        let g = Grid::with_spacing(0.0, 10.0, 0.5).unwrap();
        let mut st = FieldState::constant(g.n, KineticState::new(0.5, 0.0, 0.5));
        st.w[3] = f64::NAN;
        let dt = stable_dt(&g, &p, DEFAULT_CFL);
        assert!(matches!(step(&st, &g, &p, dt, DEFAULT_CFL), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn front_of_step_function() {
        let g = Grid::new(0.0, 199.0, 200).unwrap();
        let f: Vec<f64> = (0..200).map(|i| if i < 100 { 1.0 } else { 0.0 }).collect();
        let x = front_position(&g, &f, 0.5).unwrap();
        assert!(x > 99.0 && x < 101.0);
        assert_eq!(front_position(&g, &[0.3; 200], 0.5), None);
    }

    #[test]
    fn speed_of_exact_line() {
        let series = FrontSeries {
            species: Species::V,
            level: 0.5,
            points: (0..50).map(|i| (i as f64, Some(3.0 + 1.7 * i as f64))).collect(),
        };
        let est = estimate_speed(&series, 0.4).unwrap();
        assert!((est.speed - 1.7).abs() < 1e-12);
        assert!(est.residual < 1e-12);
        let short = FrontSeries {
            points: series.points[..12].to_vec(),
            ..series
        };
        assert!(matches!(
            estimate_speed(&short, 0.4),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn zero_amplitude_stays_constant() {
        let p = presets::ps_a();
        let mut cfg = small_cfg(ScenarioKind::InvadeEStar);
        cfg.scenario.amplitude = 0.0;
        let out = run(&p, &cfg).unwrap();
        let e = derive(&p).unwrap().e_upper();
        for i in 0..cfg.grid.n {
            assert!(out.terminal.at(i).max_dist(&e) < 1e-10);
        }
        assert!(out.alien_front().detected().next().is_none());
    }

    #[test]
    fn synthetic_tail() {
        let p = presets::ps_a();
        let g = Grid::with_spacing(0.0, 100.0, 1.0).unwrap();
        let e = derive(&p).unwrap().e_upper();
        let st = FieldState::constant(g.n, e);
        let tc = tail_classify(&st, &g, (0.0, 20.0), &p, 1e-2).unwrap();
        assert_eq!(tc.kind, TailKind::EStar);
        assert_eq!(tc.deviation, 0.0);
    }

    #[test]
    fn missing_front_is_an_error() {
        let p = presets::ps_a();
        let g = Grid::with_spacing(0.0, 100.0, 1.0).unwrap();
        let st = FieldState::constant(g.n, derive(&p).unwrap().e_upper());
        assert!(matches!(
            tail_behind_front(&st, &g, Species::V, 0.4, &p, 1e-2),
            Err(Error::NoFront)
        ));
    }

    #[test]
    fn front_near_boundary_is_an_error() {
        let p = presets::ps_a();
        let mut cfg = small_cfg(ScenarioKind::InvadeEStar);
        cfg.grid = Grid::with_spacing(0.0, 40.0, 0.2).unwrap();
        cfg.scenario.amplitude = 0.9;
        cfg.t_end = 30.0;
        assert!(matches!(run(&p, &cfg), Err(Error::FrontNearBoundary { .. })));
    }
}
