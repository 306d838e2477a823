//! Every acceptance criterion, one PASS/FAIL line each. Exits non-zero when
//! any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tripwave::bvp::{align_sandwich, continue_in_speed, solve_profile, BvpOptions, ProfileInit};
use tripwave::equilibria::eigen_split_tw;
use tripwave::model::beta_closed_forms;
use tripwave::pde::{self, RunOutput, SimConfig, Species, TailKind, DEFAULT_TAIL_TOL};
use tripwave::waves_analytic::{
    build_ul, eval_ul, lyapunov_run, rectangle_signs, verify_ul, ULCase, VerifyGrid,
};
use tripwave::{derive, Error, KineticState, Params, Result, TWState};
use tripwave_validation::{check, preset, sim_preset, Verdict};

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

fn random_params(rng: &mut ChaCha8Rng) -> Params {
    Params {
        d1: rng.random_range(0.1..3.0),
        d2: rng.random_range(0.1..3.0),
        d3: rng.random_range(0.1..3.0),
        r1: rng.random_range(0.001..2.0),
        r2: rng.random_range(0.001..2.0),
        r3: rng.random_range(0.001..2.0),
        h: rng.random_range(0.01..0.99),
        k: rng.random_range(1.01..3.0),
        a: rng.random_range(1.01..6.0),
        b1: rng.random_range(0.01..3.0),
        b2: rng.random_range(0.01..3.0),
    }
}

fn identities() -> Result<(bool, String)> {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let dq = derive(&p)?;
        let (bu, bl) = beta_closed_forms(&p);
        // Each residual is scaled by the size of its terms.
        let checks = [
            ((dq.u_star + p.b1 * dq.w_star - 1.0), 1.0 + p.b1 * dq.w_star),
            ((-1.0 + p.a * dq.u_star - dq.w_star), 1.0 + p.a * dq.u_star + dq.w_star),
            ((dq.v_lowstar + p.b2 * dq.w_lowstar - 1.0), 1.0 + p.b2 * dq.w_lowstar),
            ((-1.0 + p.a * dq.v_lowstar - dq.w_lowstar), 1.0 + p.a * dq.v_lowstar + dq.w_lowstar),
            ((dq.beta_upper - bu), 1.0 + p.h * dq.u_star + p.b2 * dq.w_star),
            ((dq.beta_lower - bl), 1.0 + p.k * dq.v_lowstar + p.b1 * dq.w_lowstar),
        ];
        for (r, scale) in checks {
            worst = worst.max(r.abs() / scale);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((worst <= 1e-12 && secs < 1.0, format!("worst relative residual {worst:.2e}, {secs:.3} s")))
}

fn verify_case(p: &Params, s: f64, case: ULCase) -> Result<(bool, String)> {
    let t = Instant::now();
    let c = build_ul(p, s, case)?;
    let rep = verify_ul(&c, &VerifyGrid::default_for(&c), 1e-10);
    let secs = t.elapsed().as_secs_f64();
    let failed: Vec<&str> = rep
        .inequalities
        .iter()
        .filter(|q| !q.pass)
        .map(|q| q.name)
        .collect();
    Ok((
        rep.pass && rep.points_checked >= 10_000 && secs < 1.0,
        format!(
            "s = {:.6} points {} order margin {:.1e} tail {:.1e} failed {:?} {:.3} s",
            c.s, rep.points_checked, rep.order_margin, rep.tail_residual, failed, secs
        ),
    ))
}

fn lemma_super() -> Result<(bool, String)> {
    let (_, p) = preset("ps_a")?;
    let mut pass = true;
    let mut detail = Vec::new();
    for s in [2.0, 1.8, 2.2, 2.6] {
        let (ok, d) = verify_case(&p, s, ULCase::EStarSuper)?;
        // Both profiles must sit on E* at z = -60.
        let c = build_ul(&p, s, ULCase::EStarSuper)?;
        let v = eval_ul(&c, -60.0);
        let e = c.tail_target().to_array();
        let tail = (0..3)
            .map(|i| (v.upper[i] - e[i]).abs().max((v.lower[i] - e[i]).abs()))
            .fold(0.0, f64::max);
        pass &= ok && tail <= 1e-6;
        detail.push(format!("[{d}, residual at -60 {tail:.1e}]"));
    }
    Ok((pass, detail.join(" ")))
}

fn lemma_critical() -> Result<(bool, String)> {
    let (_, p) = preset("ps_a_critical")?;
    let s = derive(&p)?.s_upper.ok_or(Error::HypothesisViolated("beta*>0".into()))?;
    let (ok, d) = verify_case(&p, s, ULCase::EStarCritical)?;
    Ok((ok && (s - 1.720465).abs() < 1e-6, d))
}

fn lemmas_weak_alien() -> Result<(bool, String)> {
    let (_, p) = preset("ps_c")?;
    let s_min = derive(&p)?.s_lower.ok_or(Error::HypothesisViolated("beta_*>0".into()))?;
    let (ok1, d1) = verify_case(&p, 1.1 * s_min, ULCase::ELowSuper)?;
    let (_, q) = preset("ps_c_critical")?;
    let dq = derive(&q)?;
    let sq = dq.s_lower.ok_or(Error::HypothesisViolated("beta_*>0".into()))?;
    let rates = q.d1 == q.d2 && q.r3 <= q.r1 * (2.0 - q.d3 / q.d1) * dq.beta_lower;
    let (ok2, d2) = verify_case(&q, sq, ULCase::ELowCritical)?;
    Ok((ok1 && ok2 && rates, format!("[{d1}] [rate condition {rates}, {d2}]")))
}

fn rectangle() -> Result<(bool, String)> {
    let (_, p) = preset("ps_a")?;
    let mut pass = true;
    let mut agree: f64 = 0.0;
    let mut margin = f64::INFINITY;
    for i in 0..10 {
        let r = rectangle_signs(&p, i as f64 / 10.0, 0.03, 0.1)?;
        pass &= r.all_signs_ok();
        agree = agree.max((r.alpha2 - r.alpha2_expanded).abs());
        margin = margin.min(r.alpha2).min(-r.omega2).min(r.alpha3).min(-r.omega3);
    }
    Ok((pass && agree <= 1e-12, format!("smallest sign margin {margin:.3e}, alpha2 forms differ by {agree:.1e}")))
}

fn origin_counts() -> Result<(bool, String)> {
    let origin = TWState::at_rest(KineticState::new(0.0, 0.0, 0.0));
    let mut pass = true;
    let mut seen = Vec::new();
    for name in ["ps_a", "ps_b", "ps_c"] {
        let (_, p) = preset(name)?;
        for s in [0.5, 2.0] {
            let c = eigen_split_tw(&origin, &p, s)?.as_tuple();
            pass &= c == (1, 5, 0);
            seen.push(format!("{name} s={s}: {c:?}"));
        }
    }
    Ok((pass, seen.join(", ")))
}

fn lyapunov() -> Result<(bool, String)> {
    let (_, p) = preset("ps_b")?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut inc = f64::NEG_INFINITY;
    let mut dist: f64 = 0.0;
    for _ in 0..100 {
        let x0 = KineticState::new(
            rng.random_range(0.05..1.5),
            rng.random_range(0.05..1.5),
            rng.random_range(0.05..1.5),
        );
        let r = lyapunov_run(x0, &p, 5000.0)?;
        inc = inc.max(r.max_increase);
        dist = dist.max(r.distance);
    }
    Ok((
        inc <= 1e-12 && dist <= 1e-6,
        format!("largest step increase {inc:.2e} (need <= 1e-12), largest distance to Ec at t = 5000 {dist:.3e} (need <= 1e-6)"),
    ))
}

struct PdeRun {
    sim: SimConfig,
    params: Params,
    out: RunOutput,
    secs: f64,
}

impl PdeRun {
    fn new(name: &str) -> Result<Self> {
        let t = Instant::now();
        let (params, sim) = sim_preset(name)?;
        let out = pde::run(&params, &sim)?;
        Ok(PdeRun {
            sim,
            params,
            out,
            secs: t.elapsed().as_secs_f64(),
        })
    }

    fn csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        for f in &self.out.fronts {
            f.write_csv(&mut buf)?;
        }
        self.out.terminal.write_csv(&self.sim.grid, &mut buf)?;
        Ok(buf)
    }

    fn speed(&self, species: Species) -> Result<f64> {
        let est = self.out.speed(self.sim.fit_start_frac)?;
        if est.species != species {
            return Err(Error::Domain(format!("expected a {species} front, got {}", est.species)));
        }
        Ok(est.speed)
    }

    fn tail_against(&self, target: [f64; 3]) -> Result<(TailKind, f64)> {
        let t = self.out.tail(&self.sim.grid, &self.params, DEFAULT_TAIL_TOL)?;
        let m = t.mean.to_array();
        let dev = (0..3).map(|i| (m[i] - target[i]).abs()).fold(0.0, f64::max);
        Ok((t.kind, dev))
    }
}

fn main() {
    let started = Instant::now();
    let mut verdicts: Vec<Verdict> = vec![
        check(1, "algebraic identities", identities),
        check(2, "upper/lower pair, strong alien, s > s*", lemma_super),
        check(3, "upper/lower pair, strong alien, s = s*", lemma_critical),
        check(4, "upper/lower pairs, weak alien", lemmas_weak_alien),
        check(5, "contracting rectangle signs", rectangle),
        check(6, "eigenvalue split at the origin", origin_counts),
        check(7, "Lyapunov decrease and convergence", lyapunov),
    ];

    let a = PdeRun::new("ps_a");
    let b = PdeRun::new("ps_b");
    let c = PdeRun::new("ps_c");
    let first = |r: &Result<PdeRun>| -> Result<()> { r.as_ref().map(|_| ()).map_err(|e| Error::Domain(e.to_string())) };

    verdicts.push(check(8, "invasion speed, strong alien", || {
        first(&a)?;
        let r = a.as_ref().unwrap();
        let s_min = derive(&r.params)?.s_upper.unwrap_or(f64::NAN);
        let s = r.speed(Species::V)?;
        Ok((
            rel(s, s_min) <= 0.10 && s >= 0.95 * s_min,
            format!("speed {s:.6} vs s* {s_min:.6}, relative difference {:.2e}, run {:.1} s", rel(s, s_min), r.secs),
        ))
    }));
    verdicts.push(check(9, "semi-co-existence tail", || {
        first(&a)?;
        let (kind, dev) = a.as_ref().unwrap().tail_against([0.0, 0.962264, 1.886792])?;
        Ok((kind == TailKind::ELow && dev <= 1e-2, format!("tail {kind}, deviation {dev:.3e}")))
    }));
    verdicts.push(check(10, "co-existence tail, strong alien", || {
        first(&b)?;
        let r = b.as_ref().unwrap();
        let s = r.speed(Species::V)?;
        let (kind, dev) = r.tail_against([0.237179, 0.256410, 0.480769])?;
        Ok((
            rel(s, 0.632456) <= 0.10 && dev <= 1e-2,
            format!(
                "speed {s:.6} (relative difference {:.2e}), tail {kind}, deviation {dev:.3e}, run {:.1} s",
                rel(s, 0.632456),
                r.secs
            ),
        ))
    }));
    verdicts.push(check(11, "weak-alien invasion", || {
        first(&c)?;
        let r = c.as_ref().unwrap();
        let dq = derive(&r.params)?;
        let s_min = dq.s_lower.unwrap_or(f64::NAN);
        let s = r.speed(Species::U)?;
        let ec = dq.require_ec()?.to_array();
        let (kind, dev) = r.tail_against(ec)?;
        Ok((
            rel(s, s_min) <= 0.15 && dev <= 1e-2,
            format!(
                "speed {s:.6} vs s_* {s_min:.6} (relative difference {:.2e}), tail {kind}, deviation {dev:.3e}, run {:.1} s",
                rel(s, s_min),
                r.secs
            ),
        ))
    }));

    verdicts.push(check(12, "profile between the upper and lower solutions", || {
        let (_, p) = preset("ps_a")?;
        let dq = derive(&p)?;
        let init = ProfileInit::Tanh { width: 5.0 };
        let sol = solve_profile(&p, 2.0, dq.e_upper(), dq.e_lower(), &init, &BvpOptions::default())?;
        let ul = build_ul(&p, 2.0, ULCase::EStarSuper)?;
        let (shift, viol) = align_sandwich(&sol.profile, &ul, 60.0);
        let wide = BvpOptions {
            z_min: -300.0,
            z_max: 300.0,
            m: 6001,
            ..Default::default()
        };
        let big = solve_profile(&p, 2.0, dq.e_upper(), dq.e_lower(), &init, &wide)?;
        let off = big
            .profile
            .z
            .iter()
            .position(|&z| (z - sol.profile.z[0]).abs() < 1e-9)
            .ok_or_else(|| Error::Domain("grids do not nest".into()))?;
        let mut drift: f64 = 0.0;
        for j in 0..sol.profile.len() {
            drift = drift.max(sol.profile.at(j).max_dist(&big.profile.at(j + off)));
        }
        Ok((
            viol <= 1e-6 && sol.residual <= 1e-8 && drift < 1e-4,
            format!(
                "shift {shift:.4}, violation {viol:.2e}, residual {:.2e}, doubling drift {drift:.2e}",
                sol.residual
            ),
        ))
    }));
    verdicts.push(check(13, "minimal-speed boundary", || {
        let (_, p) = preset("ps_a")?;
        let dq = derive(&p)?;
        let s_min = dq.s_upper.unwrap_or(f64::NAN);
        let o = BvpOptions::default();
        let seed = solve_profile(&p, 2.5, dq.e_upper(), dq.e_lower(), &ProfileInit::Tanh { width: 5.0 }, &o)?;
        let cont = continue_in_speed(&p, 2.5, 1.5, 50, &seed.profile, &o)?;
        let slow = solve_profile(&p, 0.5 * s_min, dq.e_upper(), dq.e_lower(), &ProfileInit::Tanh { width: 5.0 }, &o);
        let slow_fails = matches!(slow, Err(Error::NonPositiveProfile { .. }) | Err(Error::NewtonDivergence { .. }));
        Ok((
            rel(cont.last_good, s_min) < 0.05 && slow_fails,
            format!(
                "last solvable speed {:.4} vs s* {s_min:.6} (relative difference {:.2e}); at 0.5 s*: {}",
                cont.last_good,
                rel(cont.last_good, s_min),
                match &slow {
                    Ok(_) => "converged".to_string(),
                    Err(e) => e.to_string(),
                }
            ),
        ))
    }));
    verdicts.push(check(14, "byte-identical reruns", || {
        let mut same = Vec::new();
        for (name, run) in [("ps_a", &a), ("ps_b", &b), ("ps_c", &c)] {
            first(run)?;
            let before = run.as_ref().unwrap().csv()?;
            let after = PdeRun::new(name)?.csv()?;
            same.push((name, before == after, before.len()));
        }
        Ok((
            same.iter().all(|s| s.1),
            same.iter().map(|(n, ok, len)| format!("{n} {len} bytes identical {ok}")).collect::<Vec<_>>().join(", "),
        ))
    }));

    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    println!(
        "{} of {} criteria pass in {:.1} s",
        verdicts.len() - failed.len(),
        verdicts.len(),
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
