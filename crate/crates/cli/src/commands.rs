use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tripwave::bvp::{self, BvpOptions, BvpSolution, ProfileInit, WaveProfile};
use tripwave::equilibria::classify_ec;
use tripwave::model::condition_margins;
use tripwave::pde::{self, Scenario, ScenarioKind, SimConfig};
use tripwave::waves_analytic::{
    build_ul, default_delta3, eps_max, lyapunov_run, rectangle_signs, verify_ul, ULCase, VerifyGrid,
};
use tripwave::{check_conditions, derive, Config, Error, KineticState, Params};

use crate::args::{
    AnalyzeArgs, BvpArgs, Cli, Command, Common, ContinueArgs, Init, LyapunovArgs, ProfileArgs,
    RectArgs, SimArgs, VerifyArgs,
};
use crate::sweep;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    HypothesisViolated,
    /// Bad flags, unreadable or invalid configuration.
    Usage,
    /// Numerical or I/O failure while running.
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail | Status::HypothesisViolated | Status::Error => 1,
            Status::Usage => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::HypothesisViolated => "hypothesis-violated",
            Status::Usage | Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub status: Status,
    /// Main number of the run, reported by sweeps.
    pub headline: Option<f64>,
}

impl Outcome {
    fn verdict(pass: bool, headline: Option<f64>) -> Self {
        Outcome {
            status: if pass { Status::Pass } else { Status::Fail },
            headline,
        }
    }
}

fn status_of(e: &Error) -> Status {
    match e {
        Error::Config(_) | Error::InvalidParams(_) => Status::Usage,
        e if e.is_hypothesis_violation() => Status::HypothesisViolated,
        _ => Status::Error,
    }
}

type Res<T> = std::result::Result<T, Error>;

/// Parse `argv` (without the program name), run the command and report.
pub fn dispatch(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let cli = match Cli::try_parse_from(std::iter::once("tripwave".to_string()).chain(argv.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let status = if e.use_stderr() {
                let _ = write!(err, "{e}");
                Status::Usage
            } else {
                let _ = write!(out, "{e}");
                Status::Pass
            };
            return Outcome { status, headline: None };
        }
    };
    let r = match cli.command {
        Command::Analyze(a) => analyze(&a, out),
        Command::VerifyUl(a) => verify(&a, out),
        Command::Rect(a) => rect(&a, out),
        Command::Lyapunov(a) => lyapunov(&a, out),
        Command::Simulate(a) => simulate(&a, out, true),
        Command::Speed(a) => simulate(&a, out, false),
        Command::Bvp(a) => bvp_solve(&a, out),
        Command::Continue(a) => continuation(&a, out),
        Command::Sweep(a) => sweep::run(&a, out),
    };
    match r {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            Outcome {
                status: status_of(&e),
                headline: None,
            }
        }
    }
}

pub fn load_config(path: &Path) -> Res<Config> {
    Config::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
        e => e,
    })
}

fn load(c: &Common) -> Res<(Config, Params)> {
    let cfg = load_config(&c.config)?;
    let p = Params::from_config(&cfg)?;
    Ok((cfg, p))
}

fn out_dir(c: &Common) -> Res<Option<PathBuf>> {
    if let Some(d) = &c.out {
        fs::create_dir_all(d)?;
    }
    Ok(c.out.clone())
}

fn create(dir: &Path, name: &str) -> Res<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn state(x: &KineticState) -> String {
    format!("({:.9}, {:.9}, {:.9})", x.u, x.v, x.w)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), |v| format!("{v:.9}"))
}

fn analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Res<Outcome> {
    let (_, p) = load(&a.common)?;
    let dq = derive(&p)?;
    let rep = check_conditions(&p, a.s)?;
    writeln!(out, "E*  = {}", state(&dq.e_upper()))?;
    writeln!(out, "E_* = {}", state(&dq.e_lower()))?;
    match dq.ec {
        Some(ec) => writeln!(out, "Ec  = {}", state(&ec))?,
        None => writeln!(out, "Ec  = none")?,
    }
    writeln!(out, "beta*  = {:.9}", dq.beta_upper)?;
    writeln!(out, "beta_* = {:.9}", dq.beta_lower)?;
    writeln!(out, "s*  = {}", opt(dq.s_upper))?;
    writeln!(out, "s_* = {}", opt(dq.s_lower))?;
    writeln!(out, "gamma2 = {:.9}", dq.gamma2)?;
    writeln!(
        out,
        "Delta = {:.9e}  Du = {:.9e}  Dv = {:.9e}  Dw = {:.9e}",
        dq.delta, dq.delta_u, dq.delta_v, dq.delta_w
    )?;
    writeln!(out)?;
    writeln!(out, "{:<22} holds", "condition")?;
    for (name, v) in rep.flags() {
        writeln!(out, "{name:<22} {v}")?;
    }
    writeln!(out, "{:<22} {}", "uuud0_with_beta_upper", rep.uuud0_with_beta_upper)?;
    writeln!(out)?;
    writeln!(
        out,
        "strong alien into E*: {}",
        rep.thm_sc1_applicable().map_or("hypotheses not met".to_string(), |t| format!("tail {t}"))
    )?;
    writeln!(
        out,
        "weak alien into E_*: {}",
        if rep.thm_cs2_coexist {
            "tail coexist"
        } else if rep.thm_cs2_applicable {
            "hypotheses met"
        } else {
            "hypotheses not met"
        }
    )?;
    for n in &rep.notes {
        writeln!(out, "# {n}")?;
    }
    writeln!(out)?;
    writeln!(out, "{:<12} {:<44} slack", "condition", "inequality")?;
    for m in condition_margins(&p)? {
        writeln!(out, "{:<12} {:<44} {:.6e}", m.condition, m.inequality, m.slack)?;
    }
    if dq.ec.is_some() {
        let st = classify_ec(&p)?;
        writeln!(out)?;
        writeln!(
            out,
            "Routh-Hurwitz a0 = {:.6e} a1 = {:.6e} a2 = {:.6e} stable = {}",
            st.a0, st.a1, st.a2, st.routh_hurwitz_stable
        )?;
        for (name, x, c) in &st.eigen_counts {
            writeln!(out, "{name:<7} {} neg={} pos={} zero={}", state(x), c.neg, c.pos, c.zero)?;
        }
    }
    Ok(Outcome {
        status: Status::Pass,
        headline: dq.s_upper,
    })
}

fn minimal_speed(p: &Params, case: ULCase) -> Res<f64> {
    let dq = derive(p)?;
    let s = if case.invades_estar() { dq.s_upper } else { dq.s_lower };
    s.ok_or_else(|| {
        Error::HypothesisViolated(if case.invades_estar() { "beta*>0" } else { "beta_*>0" }.into())
    })
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Res<Outcome> {
    let (_, p) = load(&a.common)?;
    let s = match a.s {
        Some(s) => s,
        None if a.case.is_critical() => minimal_speed(&p, a.case)?,
        None => return Err(Error::Config(format!("--s is required for case {}", a.case))),
    };
    let c = build_ul(&p, s, a.case)?;
    let rep = verify_ul(&c, &VerifyGrid::default_for(&c), a.tol);
    writeln!(out, "case {} s = {:.9}", a.case, c.s)?;
    write!(out, "{}", rep.summary())?;
    if let Some(d) = out_dir(&a.common)? {
        rep.write_csv(create(&d, &format!("verify_{}.csv", a.case))?)?;
    }
    let slack = rep
        .inequalities
        .iter()
        .map(|q| if q.name.starts_with('U') { -q.worst } else { q.worst })
        .fold(rep.order_margin, f64::min);
    Ok(Outcome::verdict(rep.pass, Some(slack)))
}

fn rect(a: &RectArgs, out: &mut dyn Write) -> Res<Outcome> {
    let (_, p) = load(&a.common)?;
    if a.thetas == 0 {
        return Err(Error::Config("--thetas must be at least 1".into()));
    }
    let delta3 = match a.delta3 {
        Some(d) => d,
        None => default_delta3(&p)?,
    };
    let eps = match a.eps {
        Some(e) => e,
        None => 0.5 * eps_max(&p, delta3)?,
    };
    let mut rows = Vec::with_capacity(a.thetas);
    for i in 0..a.thetas {
        rows.push(rectangle_signs(&p, i as f64 / a.thetas as f64, eps, delta3)?);
    }
    writeln!(out, "delta3 = {delta3} eps = {eps}")?;
    writeln!(out, "theta,m2,M2,m3,M3,alpha2,alpha2_expanded,omega2,alpha3,omega3,ok")?;
    let mut csv = String::new();
    for r in &rows {
        csv.push_str(&format!(
            "{:.3},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
            r.theta, r.m2, r.big_m2, r.m3, r.big_m3, r.alpha2, r.alpha2_expanded, r.omega2, r.alpha3, r.omega3,
            r.all_signs_ok()
        ));
    }
    write!(out, "{csv}")?;
    if let Some(d) = out_dir(&a.common)? {
        let mut f = create(&d, "rect.csv")?;
        writeln!(f, "theta,m2,M2,m3,M3,alpha2,alpha2_expanded,omega2,alpha3,omega3,ok")?;
        write!(f, "{csv}")?;
    }
    let pass = rows.iter().all(|r| r.all_signs_ok());
    let margin = rows
        .iter()
        .map(|r| r.alpha2.min(-r.omega2).min(r.alpha3).min(-r.omega3))
        .fold(f64::INFINITY, f64::min);
    writeln!(out, "{}", if pass { "PASS" } else { "FAIL" })?;
    Ok(Outcome::verdict(pass, Some(margin)))
}

fn lyapunov(a: &LyapunovArgs, out: &mut dyn Write) -> Res<Outcome> {
    let (_, p) = load(&a.common)?;
    derive(&p)?.require_ec()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut rows = Vec::with_capacity(a.starts);
    for _ in 0..a.starts {
        let x0 = KineticState::new(
            rng.random_range(0.05..1.5),
            rng.random_range(0.05..1.5),
            rng.random_range(0.05..1.5),
        );
        rows.push(lyapunov_run(x0, &p, a.t_end)?);
    }
    let mut csv = String::from("u0,v0,w0,phi0,phi_end,max_increase,distance\n");
    for r in &rows {
        csv.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            r.start.u, r.start.v, r.start.w, r.phi_start, r.phi_end, r.max_increase, r.distance
        ));
    }
    if let Some(d) = out_dir(&a.common)? {
        write!(create(&d, "lyapunov.csv")?, "{csv}")?;
    }
    let worst_inc = rows.iter().map(|r| r.max_increase).fold(f64::NEG_INFINITY, f64::max);
    let worst_dist = rows.iter().map(|r| r.distance).fold(0.0, f64::max);
    let monotone = worst_inc <= a.slack;
    let converged = worst_dist <= a.tol;
    writeln!(out, "starts {}", rows.len())?;
    writeln!(out, "largest step increase {worst_inc:.6e} {}", if monotone { "ok" } else { "FAIL" })?;
    writeln!(
        out,
        "largest distance to Ec at t = {} {worst_dist:.6e} {}",
        a.t_end,
        if converged { "ok" } else { "FAIL" }
    )?;
    Ok(Outcome::verdict(monotone && converged, Some(worst_dist)))
}

fn simulate(a: &SimArgs, out: &mut dyn Write, write_fields: bool) -> Res<Outcome> {
    let (cfg, p) = load(&a.common)?;
    let mut sim = SimConfig::from_config(&cfg, a.scenario.as_deref())?;
    sim.keep_snapshots = a.snapshots && write_fields;
    let dir = out_dir(&a.common)?;
    let run = pde::run(&p, &sim)?;
    let dq = derive(&p)?;
    let s_min = match sim.scenario.kind {
        ScenarioKind::InvadeEStar => dq.s_upper,
        ScenarioKind::InvadeELow => dq.s_lower,
        ScenarioKind::Custom { .. } => None,
    };
    let est = run.speed(sim.fit_start_frac)?;
    writeln!(out, "scenario {}", sim.scenario.kind.name())?;
    writeln!(out, "dt {:.6e}", run.dt)?;
    writeln!(out, "speed {:.9} ({} front, level {:.6})", est.speed, est.species, est.level)?;
    match s_min {
        Some(sm) => writeln!(out, "minimal speed {sm:.9} relative difference {:.6e}", (est.speed - sm).abs() / sm)?,
        None => writeln!(out, "minimal speed undefined")?,
    }
    writeln!(out, "range [{:.6e}, {:.6e}]", run.min_value, run.max_value)?;
    if write_fields {
        let tail = run.tail(&sim.grid, &p, pde::DEFAULT_TAIL_TOL)?;
        writeln!(
            out,
            "tail {} mean {} deviation {:.6e} (nearest {})",
            tail.kind,
            state(&tail.mean),
            tail.deviation,
            tail.nearest
        )?;
    }
    if let Some(d) = dir {
        for f in &run.fronts {
            f.write_csv(create(&d, &format!("front_{}.csv", f.species))?)?;
        }
        if write_fields {
            run.terminal.write_csv(&sim.grid, create(&d, "terminal.csv")?)?;
            for st in &run.snapshots {
                st.write_snapshot(&sim.grid, &d)?;
            }
        }
    }
    Ok(Outcome {
        status: Status::Pass,
        headline: Some(est.speed),
    })
}

fn bvp_options(a: &ProfileArgs) -> BvpOptions {
    BvpOptions {
        z_min: a.z_min,
        z_max: a.z_max,
        m: a.nodes,
        ..Default::default()
    }
}

fn scenario_of(cfg: &Config, a: &ProfileArgs) -> Res<Scenario> {
    let kind: ScenarioKind = a.scenario.as_deref().or(cfg.get("scenario")).unwrap_or("invade-estar").parse()?;
    Ok(Scenario::new(kind, 0.0, 1.0))
}

fn initial_profile(cfg: &Config, p: &Params, s: f64, a: &ProfileArgs) -> Res<ProfileInit> {
    let opts = bvp_options(a);
    match a.init {
        Init::Tanh => Ok(ProfileInit::Tanh { width: a.width }),
        Init::FromPde => {
            let scenario = a.scenario.as_deref().or(cfg.get("scenario")).unwrap_or("invade-estar");
            let sim = SimConfig::from_config(cfg, Some(scenario))?;
            Ok(ProfileInit::Profile(bvp::seed_from_pde(p, &sim, s, &opts)?))
        }
    }
}

fn write_profile(dir: &Path, name: &str, sol: &BvpSolution) -> Res<()> {
    sol.profile.write_csv(create(dir, &format!("{name}.csv"))?)?;
    sol.write_log(create(dir, &format!("{name}.log"))?)?;
    Ok(())
}

fn describe(out: &mut dyn Write, sol: &BvpSolution) -> Res<()> {
    let wp: &WaveProfile = &sol.profile;
    writeln!(
        out,
        "s {:.9} iterations {} residual {:.3e} endpoint mismatch {:.3e} phase species {}",
        wp.s,
        sol.iterations,
        sol.residual,
        wp.endpoint_mismatch(),
        sol.phase_species
    )?;
    Ok(())
}

fn bvp_solve(a: &BvpArgs, out: &mut dyn Write) -> Res<Outcome> {
    let (cfg, p) = load(&a.common)?;
    let sc = scenario_of(&cfg, &a.profile)?;
    let (left, right) = (sc.background(&p)?, sc.expected_tail(&p)?);
    let init = initial_profile(&cfg, &p, a.s, &a.profile)?;
    let dir = out_dir(&a.common)?;
    let sol = bvp::solve_profile(&p, a.s, left, right, &init, &bvp_options(&a.profile))?;
    describe(out, &sol)?;
    if let Some(d) = dir {
        write_profile(&d, "profile", &sol)?;
    }
    Ok(Outcome {
        status: Status::Pass,
        headline: Some(sol.residual),
    })
}

fn continuation(a: &ContinueArgs, out: &mut dyn Write) -> Res<Outcome> {
    let (cfg, p) = load(&a.common)?;
    let sc = scenario_of(&cfg, &a.profile)?;
    let (left, right) = (sc.background(&p)?, sc.expected_tail(&p)?);
    let opts = bvp_options(&a.profile);
    let init = initial_profile(&cfg, &p, a.s, &a.profile)?;
    let dir = out_dir(&a.common)?;
    let seed = bvp::solve_profile(&p, a.s, left, right, &init, &opts)?;
    let c = bvp::continue_in_speed(&p, a.s, a.s_to, a.steps, &seed.profile, &opts)?;
    writeln!(out, "s,iterations,residual")?;
    for sol in &c.family {
        writeln!(out, "{:.9},{},{:.3e}", sol.profile.s, sol.iterations, sol.residual)?;
    }
    writeln!(out, "last good speed {:.9}", c.last_good)?;
    if let Some((s, e)) = &c.failure {
        writeln!(out, "stopped at {s:.9}: {e}")?;
    }
    if let Some(d) = dir {
        let mut f = create(&d, "family.csv")?;
        writeln!(f, "index,s,iterations,residual")?;
        for (i, sol) in c.family.iter().enumerate() {
            writeln!(f, "{i},{:.15e},{},{:.6e}", sol.profile.s, sol.iterations, sol.residual)?;
            write_profile(&d, &format!("profile_{i:03}"), sol)?;
        }
    }
    Ok(Outcome {
        status: Status::Pass,
        headline: Some(c.last_good),
    })
}
