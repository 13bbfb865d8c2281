//! The assembled closed loop: generator, exosystem, agents, internal models
//! and controllers integrated as one ODE.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::controller::{control_law, ControllerGains, EscalationPolicy};
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::generator::{consensus_distance, generator_rhs_into, min_gamma2, GeneratorGains};
use crate::graph::{CommGraph, CONNECTIVITY_EPS};
use crate::internal_model::{fit_initial_state, im_rhs_into, synthesize_bank, InternalModelBank, InternalModelConfig};
use crate::numerics::{ls_slope, norm2, Matrix, OdeSystem, Rk4};
use crate::plant::{plant_rhs_into, sample_box, steady_state_chain, validate_box, BoxBounds, Exosystem, PlantModel};

/// Any state norm above this counts as divergence.
pub const DIVERGENCE_NORM: f64 = 1e6;
/// Final `max_i |e_i|` a passing run must stay under.
pub const TRACKING_THRESHOLD: f64 = 1e-2;
pub const DEFAULT_DECIMATE: usize = 10;
/// Relative floor below which NE distances are treated as round-off.
pub const NE_DIST_FLOOR: f64 = 1e-11;
/// Exosystem states may not grow beyond this multiple of `1 + ‖v(0)‖`.
pub const EXO_GROWTH_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum EstimateInit {
    Zero,
    /// Every agent starts with the equilibrium profile.
    Equilibrium,
    Explicit(Matrix),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentInit {
    /// `z`, `x`, `η` uniform in `[−R, R]`.
    Random,
    /// On the regulated manifold for the drawn `v(0)` and `w`.
    Manifold,
    /// Per agent `[z…, x…, η_1…, …, η_r…]`.
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub estimates: EstimateInit,
    pub agents: AgentInit,
    pub v0: Option<Vec<f64>>,
    pub w: Option<Vec<Vec<f64>>>,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec {
            estimates: EstimateInit::Zero,
            agents: AgentInit::Random,
            v0: None,
            w: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub t_final: f64,
    pub dt: f64,
    pub seed: u64,
    /// Half-width of the initial-condition box.
    pub radius: f64,
    pub decimate: usize,
}

impl SimSettings {
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Everything needed to run the closed loop.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub game: GameSpec,
    pub graph: CommGraph,
    pub plant: PlantModel,
    pub exo: Exosystem,
    pub w_box: BoxBounds,
    pub im_config: InternalModelConfig,
    pub bank: InternalModelBank,
    pub generator: GeneratorGains,
    pub controller: ControllerGains,
    pub escalation: Option<EscalationPolicy>,
    pub sim: SimSettings,
    pub init: InitSpec,
    pub ablate_internal_model: bool,
    pub p_star: Vec<f64>,
    pub gamma2_bound: f64,
}

/// Inputs to [`Scenario::new`].
#[derive(Debug, Clone)]
pub struct ScenarioParts {
    pub game: GameSpec,
    pub graph: CommGraph,
    pub plant: PlantModel,
    pub exo: Exosystem,
    pub w_box: BoxBounds,
    pub im_config: InternalModelConfig,
    pub generator: GeneratorGains,
    pub controller: ControllerGains,
    pub escalation: Option<EscalationPolicy>,
    pub sim: SimSettings,
    pub init: InitSpec,
}

impl Scenario {
    /// Validates the parts and runs every synthesis step.
    pub fn new(parts: ScenarioParts) -> Result<Self> {
        let ScenarioParts {
            game,
            graph,
            plant,
            exo,
            w_box,
            im_config,
            generator,
            controller,
            escalation,
            sim,
            init,
        } = parts;
        let n = graph.n();
        if game.n() != n || plant.n_agents() != n {
            return Err(Error::Dimension(format!(
                "game has {} players, graph {n} agents, plant {} agents",
                game.n(),
                plant.n_agents()
            )));
        }
        if plant.exo_dim() != exo.dim() {
            return Err(Error::Dimension(format!(
                "plant expects a {}-dimensional exosystem, got {}",
                plant.exo_dim(),
                exo.dim()
            )));
        }
        if !(sim.dt > 0.0 && sim.t_final > 0.0 && sim.dt.is_finite() && sim.t_final.is_finite()) {
            return Err(Error::InvalidParameter("t_final and dt must be positive".into()));
        }
        if !(sim.radius >= 0.0 && sim.radius.is_finite()) {
            return Err(Error::InvalidParameter("initial-condition radius must be nonnegative".into()));
        }
        if sim.decimate == 0 {
            return Err(Error::InvalidParameter("decimate must be at least 1".into()));
        }
        let r = plant.relative_degree();
        if controller.k.len() != n || controller.k.iter().any(|k| k.len() != r) {
            return Err(Error::Dimension(format!("controller gains must be {n} rows of {r}")));
        }
        let n_w = plant.agent(0).uncertainty_dim();
        if w_box.len() != n_w {
            return Err(Error::Dimension(format!("w_box has {} intervals, plant uncertainty has {n_w}", w_box.len())));
        }
        validate_box(&w_box, "w_box")?;
        let corners = [w_box.iter().map(|b| b.0).collect::<Vec<_>>(), w_box.iter().map(|b| b.1).collect()];
        let mut rng = ChaCha8Rng::seed_from_u64(0x77);
        let mut samples: Vec<Vec<f64>> = (0..16).map(|_| sample_box(&w_box, &mut rng)).collect();
        samples.extend(corners.iter().cloned());
        plant.check_origin(&samples)?;
        for i in 0..n {
            for w in &corners {
                plant.agent(i).validate_uncertainty(w)?;
            }
        }
        if let Some(ws) = &init.w {
            if ws.len() != n || ws.iter().any(|w| w.len() != n_w) {
                return Err(Error::Dimension(format!("init.w must be {n} vectors of length {n_w}")));
            }
            for (i, w) in ws.iter().enumerate() {
                plant.agent(i).validate_uncertainty(w)?;
            }
        }
        if let Some(v0) = &init.v0 {
            if v0.len() != exo.dim() {
                return Err(Error::Dimension(format!("init.v0 must have length {}", exo.dim())));
            }
        }

        let lambda2 = graph.lambda2()?;
        if lambda2 <= CONNECTIVITY_EPS || !graph.is_connected() {
            return Err(Error::Disconnected { lambda2 });
        }
        let constants = game.estimate_constants().map_err(|e| e.in_component("game"))?;
        let gamma2_bound = min_gamma2(&constants, &graph)?;
        let p_star = game.solve_ne().map_err(|e| e.in_component("Nash equilibrium"))?;
        let bank = synthesize_bank(&plant, &im_config)?;
        let sc = Scenario {
            game,
            graph,
            plant,
            exo,
            w_box,
            im_config,
            bank,
            generator,
            controller,
            escalation,
            sim,
            init,
            ablate_internal_model: false,
            p_star,
            gamma2_bound,
        };
        if let AgentInit::Explicit(states) = &sc.init.agents {
            let layout = StateLayout::new(&sc);
            if states.len() != n {
                return Err(Error::Dimension(format!("init.agents must have {n} entries")));
            }
            for (i, s) in states.iter().enumerate() {
                if s.len() != layout.agent_len(i) {
                    return Err(Error::Dimension(format!(
                        "init.agents: agent {} needs {} entries",
                        i + 1,
                        layout.agent_len(i)
                    )));
                }
            }
        }
        if let EstimateInit::Explicit(m) = &sc.init.estimates {
            if m.rows() != n || m.cols() != n {
                return Err(Error::Dimension(format!("init.estimates must be {n}x{n}")));
            }
        }
        Ok(sc)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn with_seed(&self, seed: u64) -> Scenario {
        let mut sc = self.clone();
        sc.sim.seed = seed;
        sc
    }

    pub fn gamma2_warning(&self) -> Option<String> {
        (self.generator.gamma2 < self.gamma2_bound).then(|| {
            format!(
                "gamma2 = {} is below the sufficient bound {:.6}; convergence is not guaranteed",
                self.generator.gamma2, self.gamma2_bound
            )
        })
    }

    pub fn state_dim(&self) -> usize {
        StateLayout::new(self).dim
    }

    /// Draws `w`, then `v(0)`, then agent states from one seeded stream.
    pub fn realize(&self) -> Result<Realization> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.sim.seed);
        let n = self.n();
        let drawn_w: Vec<Vec<f64>> = (0..n).map(|_| sample_box(&self.w_box, &mut rng)).collect();
        let w = self.init.w.clone().unwrap_or(drawn_w);
        let drawn_v0 = sample_box(self.exo.v0_box(), &mut rng);
        let v0 = self.init.v0.clone().unwrap_or(drawn_v0);
        let layout = StateLayout::new(self);
        let mut x0 = vec![0.0; layout.dim];
        match &self.init.estimates {
            EstimateInit::Zero => {}
            EstimateInit::Equilibrium => {
                for i in 0..n {
                    x0[i * n..(i + 1) * n].copy_from_slice(&self.p_star);
                }
            }
            EstimateInit::Explicit(m) => x0[..n * n].copy_from_slice(m.as_slice()),
        }
        x0[layout.v..layout.v + v0.len()].copy_from_slice(&v0);
        let radius = self.sim.radius;
        for i in 0..n {
            let off = layout.agent[i];
            let len = layout.agent_len(i);
            let block = match &self.init.agents {
                AgentInit::Random => sample_box(&vec![(-radius, radius); len], &mut rng),
                AgentInit::Manifold => manifold_state(self, i, self.p_star[i], &w[i], &v0)?,
                AgentInit::Explicit(states) => states[i].clone(),
            };
            x0[off..off + len].copy_from_slice(&block);
        }
        Ok(Realization { w, v0, x0 })
    }
}

/// One draw of the uncertainty and the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub w: Vec<Vec<f64>>,
    pub v0: Vec<f64>,
    pub x0: Vec<f64>,
}

/// Offsets into the stacked state `[𝐩; v; (z, x, η_1..η_r) per agent]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateLayout {
    pub n: usize,
    pub r: usize,
    pub v: usize,
    pub n_v: usize,
    pub agent: Vec<usize>,
    pub n_z: Vec<usize>,
    pub eta: Vec<usize>,
    pub dim: usize,
}

impl StateLayout {
    pub fn new(sc: &Scenario) -> Self {
        let n = sc.n();
        let r = sc.plant.relative_degree();
        let n_v = sc.exo.dim();
        let v = n * n;
        let mut off = v + n_v;
        let mut agent = Vec::with_capacity(n);
        let mut n_z = Vec::with_capacity(n);
        let mut eta = Vec::with_capacity(n);
        for i in 0..n {
            agent.push(off);
            let nz = sc.plant.agent(i).zero_dim();
            n_z.push(nz);
            eta.push(sc.bank.eta_dim(i));
            off += nz + r + sc.bank.eta_dim(i);
        }
        StateLayout {
            n,
            r,
            v,
            n_v,
            agent,
            n_z,
            eta,
            dim: off,
        }
    }

    pub fn agent_len(&self, i: usize) -> usize {
        self.n_z[i] + self.r + self.eta[i]
    }

    /// `(z, x, η)` slices of agent i.
    pub fn split<'a>(&self, i: usize, state: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let o = self.agent[i];
        let (nz, r) = (self.n_z[i], self.r);
        (&state[o..o + nz], &state[o + nz..o + nz + r], &state[o + nz + r..o + nz + r + self.eta[i]])
    }
}

/// Internal-model states `θ_s(0)` that make agent i's steady-state signals
/// exact for exosystem initial value `v0`.
pub fn steady_internal_states(sc: &Scenario, i: usize, p_star_i: f64, w: &[f64], v0: &[f64]) -> Result<Vec<Vec<f64>>> {
    let chain = steady_state_chain(sc.plant.agent_arc(i), p_star_i, w, &sc.exo);
    let levels = sc.bank.agent(i);
    let h = 1e-3;
    // long enough for the slowest mode of any level
    let horizon = 4.0 * std::f64::consts::PI + 2.0;
    let steps = (horizon / h).round() as usize;
    let s = sc.exo.matrix().clone();
    let exo = (s.rows(), move |_t: f64, v: &[f64], dv: &mut [f64]| dv.copy_from_slice(&s.mul_vec(v)));
    let mut rk = Rk4::new(v0.len());
    let mut v = v0.to_vec();
    let mut traces = vec![Vec::with_capacity(steps + 1); levels.len()];
    for k in 0..=steps {
        for (trace, sig) in traces.iter_mut().zip(chain.signals(&v)) {
            trace.push(sig);
        }
        if k < steps {
            rk.step(&exo, k as f64 * h, &mut v, h)?;
        }
    }
    levels
        .iter()
        .zip(&traces)
        .map(|(l, trace)| Ok(l.t.mul_vec(&fit_initial_state(&l.companion, trace, h)?)))
        .collect()
}

/// Agent block `(z⋆, p, x⋆_2.., θ_1.., …)` on the regulated manifold.
pub fn manifold_state(sc: &Scenario, i: usize, p_star_i: f64, w: &[f64], v0: &[f64]) -> Result<Vec<f64>> {
    let chain = steady_state_chain(sc.plant.agent_arc(i), p_star_i, w, &sc.exo);
    let theta = steady_internal_states(sc, i, p_star_i, w, v0)?;
    let levels = sc.bank.agent(i);
    let mut out = chain.z_star(v0);
    out.push(p_star_i);
    for s in 0..levels.len() - 1 {
        out.push(levels[s].output(&theta[s]));
    }
    out.extend(theta.into_iter().flatten());
    Ok(out)
}

/// The closed loop as an ODE. Built by [`assemble`].
pub struct ClosedLoop<'a> {
    sc: &'a Scenario,
    w: Vec<Vec<f64>>,
    layout: StateLayout,
}

pub fn assemble<'a>(sc: &'a Scenario, w: &[Vec<f64>]) -> ClosedLoop<'a> {
    ClosedLoop {
        sc,
        w: w.to_vec(),
        layout: StateLayout::new(sc),
    }
}

impl ClosedLoop<'_> {
    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    /// Control input of agent i at `state`.
    pub fn control(&self, i: usize, state: &[f64]) -> f64 {
        let n = self.layout.n;
        let (_, x, eta) = self.layout.split(i, state);
        let p_i = state[i * n + i];
        control_law(&self.sc.controller.k[i], self.sc.bank.agent(i), x, eta, p_i, self.sc.ablate_internal_model)
    }
}

impl OdeSystem for ClosedLoop<'_> {
    fn dim(&self) -> usize {
        self.layout.dim
    }

    fn rhs(&self, _t: f64, state: &[f64], dx: &mut [f64]) {
        let sc = self.sc;
        let l = &self.layout;
        let n = l.n;
        generator_rhs_into(&sc.game, &sc.graph, sc.generator, &state[..n * n], &mut dx[..n * n]);
        let v = &state[l.v..l.v + l.n_v];
        let s = sc.exo.matrix();
        for (a, d) in dx[l.v..l.v + l.n_v].iter_mut().enumerate() {
            *d = s.row(a).iter().zip(v).map(|(m, x)| m * x).sum();
        }
        for i in 0..n {
            let u = self.control(i, state);
            let (z, x, eta) = l.split(i, state);
            let o = l.agent[i];
            let (nz, r) = (l.n_z[i], l.r);
            let (dz, rest) = dx[o..o + l.agent_len(i)].split_at_mut(nz);
            let (dxs, deta) = rest.split_at_mut(r);
            plant_rhs_into(sc.plant.agent(i), z, x, u, v, &self.w[i], dz, dxs);
            let mut off = 0;
            for (lvl, level) in sc.bank.agent(i).iter().enumerate() {
                let d = level.dim();
                let driving = if lvl + 1 < r { x[lvl + 1] } else { u };
                im_rhs_into(&level.stabilizer, &eta[off..off + d], driving, &mut deta[off..off + d]);
                off += d;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopTrajectory {
    pub p_star: Vec<f64>,
    pub times: Vec<f64>,
    /// Time-major rows, one entry per agent.
    pub y: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub ne_dist: Vec<f64>,
    pub max_state_norm: f64,
    pub max_exo_norm: f64,
    /// Time of the first non-finite or oversized state.
    pub diverged_at: Option<f64>,
    pub final_state: Vec<f64>,
    pub realization: Realization,
}

impl ClosedLoopTrajectory {
    pub fn n(&self) -> usize {
        self.p_star.len()
    }

    pub fn errors(&self, k: usize) -> Vec<f64> {
        self.y[k].iter().zip(&self.p[k]).map(|(y, p)| y - p).collect()
    }

    pub fn final_errors(&self) -> Vec<f64> {
        self.errors(self.times.len() - 1)
    }

    pub fn max_final_error(&self) -> f64 {
        self.final_errors().iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

/// Integrates the closed loop for one realization with RK4.
///
/// Divergence does not produce an error: the trajectory up to the failing
/// step is returned with `diverged_at` set.
pub fn simulate(sc: &Scenario, real: &Realization) -> Result<ClosedLoopTrajectory> {
    let sys = assemble(sc, &real.w);
    let n = sc.n();
    let layout = sys.layout().clone();
    if real.x0.len() != layout.dim {
        return Err(Error::Dimension(format!("initial state has {} entries, expected {}", real.x0.len(), layout.dim)));
    }
    let steps = sc.sim.steps();
    let h = sc.sim.dt;
    let cap = steps / sc.sim.decimate + 2;
    let mut traj = ClosedLoopTrajectory {
        p_star: sc.p_star.clone(),
        times: Vec::with_capacity(cap),
        y: Vec::with_capacity(cap),
        p: Vec::with_capacity(cap),
        u: Vec::with_capacity(cap),
        ne_dist: Vec::with_capacity(cap),
        max_state_norm: 0.0,
        max_exo_norm: 0.0,
        diverged_at: None,
        final_state: Vec::new(),
        realization: real.clone(),
    };
    let record = |traj: &mut ClosedLoopTrajectory, t: f64, x: &[f64]| {
        traj.times.push(t);
        traj.y.push((0..n).map(|i| layout.split(i, x).1[0]).collect());
        traj.p.push((0..n).map(|i| x[i * n + i]).collect());
        traj.u.push((0..n).map(|i| sys.control(i, x)).collect());
        traj.ne_dist.push(consensus_distance(&x[..n * n], &sc.p_star));
    };
    let mut x = real.x0.clone();
    let mut rk = Rk4::new(layout.dim);
    traj.max_state_norm = norm2(&x);
    traj.max_exo_norm = norm2(&x[layout.v..layout.v + layout.n_v]);
    record(&mut traj, 0.0, &x);
    for k in 0..steps {
        let t = k as f64 * h;
        if rk.step(&sys, t, &mut x, h).is_err() {
            traj.diverged_at = Some(t);
            break;
        }
        let t_next = (k + 1) as f64 * h;
        let norm = norm2(&x);
        traj.max_state_norm = traj.max_state_norm.max(norm);
        traj.max_exo_norm = traj.max_exo_norm.max(norm2(&x[layout.v..layout.v + layout.n_v]));
        if norm > DIVERGENCE_NORM {
            traj.diverged_at = Some(t_next);
            record(&mut traj, t_next, &x);
            break;
        }
        if (k + 1) % sc.sim.decimate == 0 || k + 1 == steps {
            record(&mut traj, t_next, &x);
        }
    }
    traj.final_state = x;
    Ok(traj)
}

/// Draws the realization from the scenario seed and integrates.
/// Divergence becomes [`Error::Diverged`].
pub fn run(sc: &Scenario) -> Result<ClosedLoopTrajectory> {
    let traj = simulate(sc, &sc.realize()?)?;
    match traj.diverged_at {
        Some(t) => Err(Error::Diverged { t }),
        None => Ok(traj),
    }
}

/// Whether `v(t)` stayed within [`EXO_GROWTH_LIMIT`]` · (1 + ‖v(0)‖)`.
pub fn exosystem_bounded(traj: &ClosedLoopTrajectory) -> bool {
    traj.max_exo_norm <= EXO_GROWTH_LIMIT * (1.0 + norm2(&traj.realization.v0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub final_errors: Vec<f64>,
    pub max_final_error: f64,
    /// `|y_i(T) − p*_i|`.
    pub final_output_gaps: Vec<f64>,
    pub max_output_gap: f64,
    pub final_ne_dist: f64,
    /// Least-squares slope of `ln ‖𝐩 − 𝐩*‖`; `None` when there is nothing
    /// above the round-off floor to fit.
    pub ne_slope: Option<f64>,
    pub peak_control: f64,
    pub max_state_norm: f64,
}

/// Slope of `ln d(t)` over the second half of the window in which `d` is
/// above the round-off floor (the whole horizon if it never drops below).
pub fn log_slope(times: &[f64], dist: &[f64], floor: f64) -> Option<f64> {
    let (first, last) = (*times.first()?, *times.last()?);
    let end = dist.iter().position(|d| !(*d > floor)).map_or(last, |k| times[k]);
    let start = first + (end - first) / 2.0;
    let (ts, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(dist)
        .filter(|(t, d)| **t >= start && **t <= end && **d > floor)
        .map(|(t, d)| (*t, d.ln()))
        .unzip();
    ls_slope(&ts, &ys)
}

pub fn metrics(traj: &ClosedLoopTrajectory) -> Metrics {
    let last = traj.times.len() - 1;
    let final_errors = traj.errors(last);
    let final_output_gaps: Vec<f64> = traj.y[last].iter().zip(&traj.p_star).map(|(y, p)| (y - p).abs()).collect();
    let scale = 1.0 + norm2(&traj.p_star);
    Metrics {
        max_final_error: final_errors.iter().fold(0.0, |m, e| m.max(e.abs())),
        final_errors,
        max_output_gap: final_output_gaps.iter().fold(0.0, |m, e| m.max(*e)),
        final_output_gaps,
        final_ne_dist: traj.ne_dist[last],
        ne_slope: log_slope(&traj.times, &traj.ne_dist, NE_DIST_FLOOR * scale),
        peak_control: traj.u.iter().flatten().fold(0.0, |m, u| m.max(u.abs())),
        max_state_norm: traj.max_state_norm,
    }
}

/// CSV with header `t,p_star_1..N,y_1..N,p_1..N,e_1..N,u_1..N,ne_dist`.
/// Numbers use the shortest representation that round-trips.
pub fn write_csv<W: Write>(traj: &ClosedLoopTrajectory, mut out: W) -> io::Result<()> {
    let n = traj.n();
    let mut header = vec!["t".to_string()];
    for prefix in ["p_star", "y", "p", "e", "u"] {
        header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    header.push("ne_dist".into());
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for k in 0..traj.times.len() {
        use std::fmt::Write as _;
        line.clear();
        let e = traj.errors(k);
        let fields = std::iter::once(&traj.times[k])
            .chain(&traj.p_star)
            .chain(&traj.y[k])
            .chain(&traj.p[k])
            .chain(&e)
            .chain(&traj.u[k])
            .chain(std::iter::once(&traj.ne_dist[k]));
        for (idx, v) in fields.enumerate() {
            if idx > 0 {
                line.push(',');
            }
            write!(line, "{v:?}").expect("writing to a String");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_pure_exponential() {
        let times: Vec<f64> = (0..=500).map(|k| k as f64 * 0.01).collect();
        let dist: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
        let s = log_slope(&times, &dist, 1e-11).unwrap();
        assert!((s + 2.0).abs() < 1e-6);
    }

    #[test]
    fn slope_of_zero_trace_is_absent() {
        let times: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert_eq!(log_slope(&times, &[0.0; 10], 1e-11), None);
    }

    #[test]
    fn slope_stops_at_floor() {
        let times: Vec<f64> = (0..=3000).map(|k| k as f64 * 0.01).collect();
        let dist: Vec<f64> = times.iter().map(|t| ((-3.0 * t).exp()).max(1e-15)).collect();
        let s = log_slope(&times, &dist, 1e-11).unwrap();
        assert!((s + 3.0).abs() < 1e-6);
    }
}
