//! Invariant checks run against a scenario.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controller::{control_law, escalate_gains, transform, transformed_feedback};
use crate::error::Result;
use crate::generator::{generator_rhs, generator_rhs_stacked, GeneratorState};
use crate::internal_model::{verify_reproduction, ImLevel};
use crate::numerics::{dot, norm2, Matrix, Rk4};
use crate::plant::{sample_box, steady_state_chain};
use crate::simulation::{exosystem_bounded, simulate, Scenario};

pub const GRADIENT_TOL: f64 = 1e-5;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const PDE_TOL: f64 = 1e-6;
pub const REPRODUCTION_TOL: f64 = 1e-5;
pub const STEP_HALVING_TOL: f64 = 1e-6;
const CHECK_SEED: u64 = 0x636b;
const RANDOM_POINTS: usize = 50;
const RANDOM_STATES: usize = 100;
const REPRODUCTION_HORIZON: f64 = 20.0;
const REPRODUCTION_DT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, res: Result<(bool, String)>) -> CheckOutcome {
    match res {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn sample_profile(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn box_scale(sc: &Scenario) -> f64 {
    2.0 * (1.0 + sc.p_star.iter().fold(0.0f64, |m, p| m.max(p.abs())))
}

/// Worst gap between `∇_i J_i` and a central difference of `J_i`.
pub fn gradient_check(sc: &Scenario) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED);
    let n = sc.n();
    let scale = box_scale(sc);
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_POINTS {
        let y = sample_profile(&mut rng, n, scale);
        for i in 0..n {
            let h = 1e-5 * (1.0 + y[i].abs());
            let mut q = y.clone();
            q[i] = y[i] + h;
            let fp = sc.game.cost(i, &q);
            q[i] = y[i] - h;
            let fm = sc.game.cost(i, &q);
            let fd = (fp - fm) / (2.0 * h);
            worst = worst.max((fd - sc.game.partial_gradient(i, &y)).abs());
        }
    }
    (worst, RANDOM_POINTS)
}

/// Smallest sampled `(F(x) − F(y))·(x − y) / ‖x − y‖²`.
pub fn monotonicity_check(sc: &Scenario) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED + 1);
    let n = sc.n();
    let scale = box_scale(sc);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let x = sample_profile(&mut rng, n, scale);
        let y = sample_profile(&mut rng, n, scale);
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let fx = sc.game.pseudo_gradient(&x);
        let fy = sc.game.pseudo_gradient(&y);
        let df: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
        let dd = dot(&d, &d);
        if dd > 0.0 {
            worst = worst.min(dot(&df, &d) / dd);
        }
    }
    worst
}

/// Largest relative gap between the per-agent and stacked generator fields.
pub fn generator_forms_check(sc: &Scenario) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED + 2);
    let n = sc.n();
    let scale = box_scale(sc);
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_STATES {
        let state = GeneratorState {
            estimates: Matrix::from_vec(n, n, sample_profile(&mut rng, n * n, scale)).unwrap(),
        };
        let a = generator_rhs(&sc.game, &sc.graph, sc.generator, &state);
        let b = generator_rhs_stacked(&sc.game, &sc.graph, sc.generator, &state);
        worst = worst.max((&a - &b).max_abs() / (1.0 + a.max_abs()));
    }
    worst
}

/// Largest relative gap between `u − Ψ_rη_r` from the feedback law and the
/// backstepping recursion on the transformed states.
pub fn controller_identity_check(sc: &Scenario) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED + 3);
    let r = sc.plant.relative_degree();
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_STATES {
        for i in 0..sc.n() {
            let levels = sc.bank.agent(i);
            let eta = sample_profile(&mut rng, sc.bank.eta_dim(i), 2.0);
            let x = sample_profile(&mut rng, r, 5.0);
            let p = rng.random_range(-3.0..3.0);
            let k = &sc.controller.k[i];
            let u = control_law(k, levels, &x, &eta, p, false);
            let nz = sc.plant.agent(i).zero_dim();
            let theta: Vec<Vec<f64>> = levels.iter().map(|l| vec![0.0; l.dim()]).collect();
            let ts = transform(levels, &vec![0.0; nz], &x, &eta, u, &vec![0.0; nz], &theta, p);
            let ubar = transformed_feedback(k, &ts.x_bar[..r]);
            worst = worst.max((ts.x_bar[r] - ubar).abs() / (1.0 + u.abs()));
        }
    }
    worst
}

fn max_sylvester_residual(sc: &Scenario) -> f64 {
    sc.bank
        .levels
        .iter()
        .flatten()
        .map(|l: &ImLevel| {
            let ng = &Matrix::column(&l.stabilizer.n) * &l.companion.gamma;
            l.residual / (1.0 + ng.frobenius_norm())
        })
        .fold(0.0, f64::max)
}

/// Samples of `w` and `v(0)` used by the steady-state checks.
fn truth_samples(sc: &Scenario) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED + 4);
    let lo: Vec<f64> = sc.w_box.iter().map(|b| b.0).collect();
    let hi: Vec<f64> = sc.w_box.iter().map(|b| b.1).collect();
    let mut ws = vec![lo, hi];
    ws.push(sample_box(&sc.w_box, &mut rng));
    ws.into_iter().map(|w| (w, sample_box(sc.exo.v0_box(), &mut rng))).collect()
}

/// Exosystem trajectory sampled every `h` for `steps` steps.
fn exo_trace(sc: &Scenario, v0: &[f64], h: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    let s = sc.exo.matrix().clone();
    let sys = (s.rows(), move |_t: f64, v: &[f64], dv: &mut [f64]| dv.copy_from_slice(&s.mul_vec(v)));
    let mut rk = Rk4::new(v0.len());
    let mut v = v0.to_vec();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(v.clone());
    for k in 0..steps {
        rk.step(&sys, k as f64 * h, &mut v, h)?;
        out.push(v.clone());
    }
    Ok(out)
}

/// Worst residual of `d/dt 𝐳(p*, v(t), w) = f0(𝐳, p*, v, w)` along
/// exosystem trajectories.
pub fn steady_zero_check(sc: &Scenario) -> Result<f64> {
    let h = 1e-3;
    let mut worst = 0.0f64;
    for (w, v0) in truth_samples(sc) {
        let trace = exo_trace(sc, &v0, h, 10_000)?;
        for i in 0..sc.n() {
            let agent = sc.plant.agent(i);
            let p = sc.p_star[i];
            for k in (1..trace.len() - 1).step_by(50) {
                let dz_fd: Vec<f64> = agent
                    .steady_zero(p, &trace[k + 1], &w)
                    .iter()
                    .zip(agent.steady_zero(p, &trace[k - 1], &w))
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect();
                let z = agent.steady_zero(p, &trace[k], &w);
                let mut f0 = vec![0.0; z.len()];
                agent.f0(&z, p, &trace[k], &w, &mut f0);
                let gap = dz_fd.iter().zip(&f0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                worst = worst.max(gap / (1.0 + norm2(&f0)));
            }
        }
    }
    Ok(worst)
}

/// Worst relative reproduction error of the internal models over
/// `t ∈ [0, 20]` with `h = 1e-3`.
pub fn reproduction_check(sc: &Scenario) -> Result<f64> {
    let steps = (REPRODUCTION_HORIZON / REPRODUCTION_DT).round() as usize;
    let mut worst = 0.0f64;
    for (w, v0) in truth_samples(sc) {
        let trace = exo_trace(sc, &v0, REPRODUCTION_DT, steps)?;
        for i in 0..sc.n() {
            let chain = steady_state_chain(sc.plant.agent_arc(i), sc.p_star[i], &w, &sc.exo);
            let signals: Vec<Vec<f64>> = trace.iter().map(|v| chain.signals(v)).collect();
            for (s, level) in sc.bank.agent(i).iter().enumerate() {
                let sig: Vec<f64> = signals.iter().map(|row| row[s]).collect();
                let scale = 1.0 + sig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                worst = worst.max(verify_reproduction(level, &sig, REPRODUCTION_DT) / scale);
            }
        }
    }
    Ok(worst)
}

/// Largest change of `y_i(T)` when the step is halved, and whether both
/// runs stayed bounded with a bounded exosystem.
pub fn step_halving_check(sc: &Scenario) -> Result<(f64, bool)> {
    let mut sc = sc.clone();
    if let Some(policy) = sc.escalation {
        let found = escalate_gains(&sc, &sc.controller.clone(), policy, &[sc.sim.seed])?;
        sc.controller = found.controller;
        sc.generator.gamma1 = found.gamma1;
    }
    let real = sc.realize()?;
    let coarse = simulate(&sc, &real)?;
    let mut fine_sc = sc.clone();
    fine_sc.sim.dt /= 2.0;
    let fine = simulate(&fine_sc, &real)?;
    let ok = coarse.diverged_at.is_none() && fine.diverged_at.is_none() && exosystem_bounded(&coarse);
    let a = coarse.y.last().unwrap();
    let b = fine.y.last().unwrap();
    let gap = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok((gap, ok))
}

/// Runs every check. Warnings (such as γ₂ below its sufficient bound) are
/// returned separately and do not fail the suite.
pub fn run_checks(sc: &Scenario) -> (Vec<CheckOutcome>, Vec<String>) {
    let mut out = Vec::new();
    let (grad, points) = gradient_check(sc);
    out.push(outcome(
        "gradient vs finite difference",
        Ok((grad <= GRADIENT_TOL, format!("max gap {grad:.3e} over {points} points"))),
    ));
    let mono = monotonicity_check(sc);
    out.push(outcome(
        "strong monotonicity (sampled)",
        Ok((mono > 0.0, format!("min (dF.dy)/|dy|^2 = {mono:.6}"))),
    ));
    let ne_res = norm2(&sc.game.pseudo_gradient(&sc.p_star));
    out.push(outcome(
        "Nash equilibrium residual",
        Ok((ne_res <= sc.game.ne_tolerance(), format!("|F(p*)| = {ne_res:.3e}"))),
    ));
    let forms = generator_forms_check(sc);
    out.push(outcome(
        "generator per-agent vs stacked form",
        Ok((forms <= IDENTITY_TOL, format!("max relative gap {forms:.3e}"))),
    ));
    let syl = max_sylvester_residual(sc);
    out.push(outcome(
        "Sylvester residuals",
        Ok((syl <= 1e-10, format!("max relative residual {syl:.3e}"))),
    ));
    let ident = controller_identity_check(sc);
    out.push(outcome(
        "feedback law vs backstepping recursion",
        Ok((ident <= IDENTITY_TOL, format!("max relative gap {ident:.3e}"))),
    ));
    out.push(outcome(
        "steady zero-dynamics invariance",
        steady_zero_check(sc).map(|g| (g <= PDE_TOL, format!("max residual {g:.3e}"))),
    ));
    out.push(outcome(
        "internal-model reproduction",
        reproduction_check(sc).map(|g| (g <= REPRODUCTION_TOL, format!("max relative error {g:.3e}"))),
    ));
    out.push(outcome(
        "step-halving consistency",
        step_halving_check(sc).map(|(g, ok)| {
            (
                ok && g < STEP_HALVING_TOL,
                if ok { format!("max |dy(T)| {g:.3e}") } else { "run diverged or exosystem grew".into() },
            )
        }),
    ));
    let warnings = sc.gamma2_warning().into_iter().collect();
    (out, warnings)
}
