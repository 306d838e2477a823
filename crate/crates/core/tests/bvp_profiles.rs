use tripwave::bvp::{
    continue_in_speed, residual, seed_from_pde, solve_profile, BvpOptions, ProfileInit,
};
use tripwave::pde::{FieldState, Grid, Scenario, ScenarioKind, SimConfig, Simulator};
use tripwave::{derive, Error};

fn sim(kind: ScenarioKind, grid: Grid, t_end: f64, level_frac: f64) -> SimConfig {
    SimConfig {
        grid,
        scenario: Scenario::new(kind, 0.1, 5.0),
        cfl_factor: 0.2,
        t_end,
        sample_every: t_end / 50.0,
        level_frac,
        fit_start_frac: 0.4,
        keep_snapshots: false,
    }
}

#[test]
fn coexistence_profile_by_continuation() {
    let p = tripwave::presets::ps_b();
    let dq = derive(&p).unwrap();
    let ec = dq.ec.unwrap();
    let opts = BvpOptions {
        z_min: -1500.0,
        z_max: 8000.0,
        m: 4751,
        ..Default::default()
    };
    let cfg = sim(ScenarioKind::InvadeEStar, Grid::with_spacing(0.0, 4200.0, 1.0).unwrap(), 6000.0, 0.5);
    let seed = seed_from_pde(&p, &cfg, 0.65, &opts).unwrap();
    let first = solve_profile(&p, 0.65, dq.e_upper(), ec, &ProfileInit::Profile(seed), &opts).unwrap();
    let c = continue_in_speed(&p, 0.65, 1.0, 20, &first.profile, &opts).unwrap();
    assert!(c.failure.is_none(), "{:?}", c.failure);
    assert_eq!(c.last_good, 1.0);
    let last = c.family.last().unwrap();
    assert!(last.residual <= 1e-8);
    assert!(last.profile.endpoint_mismatch() <= 1e-3);
    let n = last.profile.len();
    assert!(last.profile.at(n - 2).max_dist(&ec) < 1e-3);
    let (_, r) = residual(&last.profile, &p);
    assert!(r <= 1e-8);
}

#[test]
fn weak_alien_family_stops_near_minimal_speed() {
    let p = tripwave::presets::ps_c();
    let dq = derive(&p).unwrap();
    let s_min = dq.s_lower.unwrap();
    let opts = BvpOptions {
        z_min: -2000.0,
        z_max: 6000.0,
        m: 4001,
        ..Default::default()
    };
    let cfg = sim(ScenarioKind::InvadeELow, Grid::with_spacing(0.0, 9000.0, 2.0).unwrap(), 40000.0, 0.1);
    let seed = seed_from_pde(&p, &cfg, 0.3, &opts).unwrap();
    let c = continue_in_speed(&p, 0.3, 0.14, 32, &seed, &opts).unwrap();
    assert!(c.family.iter().all(|s| s.residual <= 1e-8));
    assert!((c.last_good - s_min).abs() / s_min < 0.05, "last good {}", c.last_good);
    let (s_fail, e) = c.failure.expect("continuation must stop below the minimal speed");
    assert!(s_fail < s_min);
    assert!(matches!(e, Error::NonPositiveProfile { .. } | Error::NewtonDivergence { .. } | Error::HypothesisViolated(_)), "{e}");
}

#[test]
fn profile_is_transported_by_the_pde() {
    let p = tripwave::presets::ps_a();
    let dq = derive(&p).unwrap();
    let s = 2.0;
    let sol = solve_profile(&p, s, dq.e_upper(), dq.e_lower(), &ProfileInit::Tanh { width: 5.0 }, &BvpOptions::default())
        .unwrap();
    let wp = &sol.profile;

    let g = Grid::with_spacing(0.0, 400.0, 0.2).unwrap();
    let x_front = 200.0;
    let field_at = |t: f64| {
        let mut st = FieldState::constant(g.n, dq.e_upper());
        st.t = t;
        for i in 0..g.n {
            let x = wp.sample(x_front + s * t - g.x(i));
            st.u[i] = x.u;
            st.v[i] = x.v;
            st.w[i] = x.w;
        }
        st
    };
    let cfl = 0.2;
    let mut simr = Simulator::new(g, p, &field_at(0.0), tripwave::pde::stable_dt(&g, &p, cfl), cfl).unwrap();
    let t_end = 20.0;
    while simr.t() < t_end - 1e-12 {
        let h = simr.dt.min(t_end - simr.t());
        simr.step_by(h).unwrap();
    }
    let got = simr.state();
    let want = field_at(t_end);
    let mut drift: f64 = 0.0;
    for i in 0..g.n {
        drift = drift.max(got.at(i).max_dist(&want.at(i)));
    }
    assert!(drift < 1e-2, "drift {drift}");
}
