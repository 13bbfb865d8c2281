use nashtrack::config::ScenarioFile;
use nashtrack::controller::{escalate_gains, ControllerGains, EscalationPolicy};
use nashtrack::numerics::OdeSystem;
use nashtrack::simulation::{assemble, simulate, AgentInit, EstimateInit, Scenario};
use serde_json::{json, Value};

const BENCHMARK: &str = include_str!("../../../scenarios/benchmark.scenario");

fn file_with(edit: impl FnOnce(&mut Value)) -> ScenarioFile {
    let mut v: Value = serde_json::from_str(BENCHMARK).unwrap();
    edit(&mut v);
    ScenarioFile::parse(&v.to_string()).unwrap()
}

/// Benchmark with the gains escalation settles on, escalation disabled.
fn tuned(edit: impl FnOnce(&mut Value)) -> Scenario {
    file_with(|v| {
        v["controller"] = json!({ "k": vec![vec![16.0, 16.0]; 4] });
        v["gains"]["gamma1"] = json!(4.0);
        edit(v);
    })
    .build()
    .unwrap()
}

#[test]
fn benchmark_state_dimension() {
    let sc = tuned(|_| {});
    // 16 estimates, 2 exosystem states, 4 × (z, x1, x2, η of size 3 + 5)
    assert_eq!(sc.state_dim(), 16 + 2 + 4 * 11);
    assert_eq!(sc.realize().unwrap().x0.len(), 62);
}

#[test]
fn estimate_block_is_stationary_at_consensus() {
    let mut sc = tuned(|_| {});
    sc.init.estimates = EstimateInit::Equilibrium;
    let real = sc.realize().unwrap();
    let cl = assemble(&sc, &real.w);
    let mut dx = vec![0.0; cl.dim()];
    cl.rhs(0.0, &real.x0, &mut dx);
    assert!(dx[..16].iter().all(|d| d.abs() <= 1e-9), "{:?}", &dx[..16]);
}

#[test]
fn rhs_is_deterministic() {
    let sc = tuned(|_| {});
    let real = sc.realize().unwrap();
    let cl = assemble(&sc, &real.w);
    let mut a = vec![0.0; cl.dim()];
    let mut b = vec![0.0; cl.dim()];
    cl.rhs(0.3, &real.x0, &mut a);
    cl.rhs(0.3, &real.x0, &mut b);
    assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert_eq!(sc.realize().unwrap(), real);
}

#[test]
fn manifold_start_stays_on_target() {
    let mut sc = tuned(|v| v["sim"]["t_final"] = json!(5.0));
    sc.init.estimates = EstimateInit::Equilibrium;
    sc.init.agents = AgentInit::Manifold;
    let traj = simulate(&sc, &sc.realize().unwrap()).unwrap();
    let worst = (0..traj.times.len()).flat_map(|k| traj.errors(k)).fold(0.0f64, |m, e| m.max(e.abs()));
    assert!(worst <= 1e-6, "max |e| = {worst:e}");
}

#[test]
fn decoupled_game_tracks_h1() {
    let mut sc = tuned(|v| {
        v["game"]["h2"] = json!([0.0, 0.0, 0.0, 0.0]);
        v["game"]["h3"] = json!([0.0, 0.0, 0.0, 0.0]);
        v["gains"]["gamma2"] = json!(10.0);
    });
    sc.init.w = Some(vec![vec![0.0; 6]; 4]);
    let traj = simulate(&sc, &sc.realize().unwrap()).unwrap();
    let y = traj.y.last().unwrap();
    for (yi, h) in y.iter().zip([2.0, 4.0, -2.0, 1.0]) {
        assert!((yi - h).abs() <= 1e-2, "y = {y:?}");
    }
}

#[test]
fn output_gap_obeys_triangle_inequality() {
    let sc = tuned(|v| v["sim"]["t_final"] = json!(3.0));
    let traj = simulate(&sc, &sc.realize().unwrap()).unwrap();
    for k in 0..traj.times.len() {
        for (i, e) in traj.errors(k).iter().enumerate() {
            let gap = (traj.y[k][i] - traj.p_star[i]).abs();
            let est = (traj.p[k][i] - traj.p_star[i]).abs();
            assert!(gap <= e.abs() + est + 1e-12);
        }
    }
}

#[test]
fn output_maps_do_not_depend_on_game_or_plant() {
    let a = tuned(|_| {});
    let b = tuned(|v| {
        v["game"]["h1"] = json!([0.0, 0.0, 1.0, 1.0]);
        v["plant"]["g"] = json!([-3.0, 0.1, 0.1, 0.1, 0.1, 0.1]);
    });
    for (la, lb) in a.bank.levels.iter().flatten().zip(b.bank.levels.iter().flatten()) {
        assert_eq!(la.psi, lb.psi);
    }
}

#[test]
fn escalation_keeps_passing_gains() {
    let sc = tuned(|_| {});
    let found = escalate_gains(&sc, &sc.controller, EscalationPolicy::default(), &[1]).unwrap();
    assert_eq!(found.rounds, 0);
    assert_eq!(found.controller, sc.controller);
    assert_eq!(found.gamma1, 4.0);
}

#[test]
fn escalation_doubles_once() {
    let mut sc = tuned(|_| {});
    sc.generator.gamma1 = 2.0;
    let half = ControllerGains::uniform(4, 2, 8.0).unwrap();
    let found = escalate_gains(&sc, &half, EscalationPolicy::default(), &[1]).unwrap();
    assert_eq!(found.rounds, 1);
    assert_eq!(found.controller, ControllerGains::uniform(4, 2, 16.0).unwrap());
    assert_eq!(found.gamma1, 4.0);
}

#[test]
fn escalation_reports_exhaustion() {
    let mut sc = tuned(|v| v["sim"]["t_final"] = json!(2.0));
    sc.generator.gamma1 = 1.0;
    let weak = ControllerGains::uniform(4, 2, 4.0).unwrap();
    let policy = EscalationPolicy { factor: 2.0, max_rounds: 0 };
    assert!(escalate_gains(&sc, &weak, policy, &[1]).is_err());
}

#[test]
fn normalized_file_round_trips() {
    let file = ScenarioFile::parse(BENCHMARK).unwrap();
    let norm = file.normalized();
    let again = ScenarioFile::parse(&norm.to_json()).unwrap();
    assert_eq!(again.normalized(), norm);
    let (a, b) = (file.build().unwrap(), again.build().unwrap());
    assert_eq!(a.p_star, b.p_star);
    assert_eq!(a.state_dim(), b.state_dim());
}
