//! Lower-triangular agent dynamics, the disturbance exosystem and the
//! steady-state maps the internal models have to reproduce.
//!
//! Agent i evolves as
//!
//! ```text
//! ż   = f0(z, x1, v, w)
//! ẋ_s = f_s(z, x1..x_s, v, w) + x_{s+1},   s < r
//! ẋ_r = f_r(z, x1..x_r, v, w) + u
//! y   = x1
//! ```

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::CompiledExpr;
use crate::numerics::{eigenvalues, norm2, Matrix};

/// Step along `Sv` for finite-difference steady-state derivatives.
pub const STEADY_FD_STEP: f64 = 1e-5;
/// Tolerance for `f(0, …, 0, w) = 0`.
pub const ORIGIN_TOL: f64 = 1e-12;

/// Per-agent dynamics. `w` is the agent's constant uncertainty vector.
pub trait AgentDynamics: Send + Sync + fmt::Debug {
    fn relative_degree(&self) -> usize;
    fn zero_dim(&self) -> usize;
    fn exo_dim(&self) -> usize;
    fn uncertainty_dim(&self) -> usize;

    fn f0(&self, z: &[f64], x1: f64, v: &[f64], w: &[f64], dz: &mut [f64]);

    /// Drift of level `s` (1-based); `x` holds `x1..x_s`.
    fn drift(&self, s: usize, z: &[f64], x: &[f64], v: &[f64], w: &[f64]) -> f64;

    /// Steady zero-dynamics state for a frozen output value `s`.
    fn steady_zero(&self, s: f64, v: &[f64], w: &[f64]) -> Vec<f64>;

    /// Annihilating-polynomial coefficients ς of the steady-state signal
    /// of each level `1..=r`.
    fn im_coeffs(&self) -> Vec<Vec<f64>>;

    /// Rejects uncertainty values for which the structural assumptions fail.
    fn validate_uncertainty(&self, _w: &[f64]) -> Result<()> {
        Ok(())
    }

    /// Closed-form steady signals `[x⋆_2, …, x⋆_r, u⋆]` when available.
    fn steady_signals_closed_form(&self, _p_star: f64, _v: &[f64], _w: &[f64], _s: &Matrix) -> Option<Vec<f64>> {
        None
    }
}

/// The four-agent benchmark plant with parameters `g = (g1..g6)`, `g1 < 0`.
/// The uncertainty `w ∈ ℝ⁶` perturbs `g` additively.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleAgent {
    pub g: [f64; 6],
}

impl ExampleAgent {
    #[inline]
    fn params(&self, w: &[f64]) -> [f64; 6] {
        let mut g = self.g;
        for (gk, wk) in g.iter_mut().zip(w) {
            *gk += wk;
        }
        g
    }
}

impl AgentDynamics for ExampleAgent {
    fn relative_degree(&self) -> usize {
        2
    }
    fn zero_dim(&self) -> usize {
        1
    }
    fn exo_dim(&self) -> usize {
        2
    }
    fn uncertainty_dim(&self) -> usize {
        6
    }

    fn f0(&self, z: &[f64], x1: f64, v: &[f64], w: &[f64], dz: &mut [f64]) {
        let g = self.params(w);
        dz[0] = g[0] * z[0] + x1 + g[1] * v[0];
    }

    fn drift(&self, s: usize, z: &[f64], x: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let g = self.params(w);
        match s {
            1 => g[2] * z[0] * x[0] + g[3] * v[1],
            2 => g[4] * z[0] * z[0] * x[0] + g[5] * x[0] * x[1],
            _ => panic!("example plant has relative degree 2, asked for level {s}"),
        }
    }

    fn steady_zero(&self, s: f64, v: &[f64], w: &[f64]) -> Vec<f64> {
        let g = self.params(w);
        let d = g[0] * g[0] + 1.0;
        vec![-g[0] * g[1] * v[0] / d - g[1] * v[1] / d - s / g[0]]
    }

    fn validate_uncertainty(&self, w: &[f64]) -> Result<()> {
        let g1 = self.params(w)[0];
        if g1 < 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "plant constraint g1 < 0 violated by the uncertainty box (g1 + w1 = {g1})"
            )))
        }
    }

    fn im_coeffs(&self) -> Vec<Vec<f64>> {
        // x⋆_2 has modes {0, ±i}; u⋆ adds ±2i through the z⋆² term
        vec![vec![0.0, -1.0, 0.0], vec![0.0, -4.0, 0.0, -5.0, 0.0]]
    }

    fn steady_signals_closed_form(&self, p_star: f64, v: &[f64], w: &[f64], s: &Matrix) -> Option<Vec<f64>> {
        let g = self.params(w);
        let d = g[0] * g[0] + 1.0;
        let z = self.steady_zero(p_star, v, w)[0];
        let x2 = -g[2] * p_star * z - g[3] * v[1];
        let dz_dv = [-g[0] * g[1] / d, -g[1] / d];
        let dx2_dv = [-g[2] * p_star * dz_dv[0], -g[2] * p_star * dz_dv[1] - g[3]];
        let sv = s.mul_vec(v);
        let lie = dx2_dv[0] * sv[0] + dx2_dv[1] * sv[1];
        let u = lie - g[4] * p_star * z * z - g[5] * p_star * x2;
        Some(vec![x2, u])
    }
}

/// Expression-defined agent, identical structure for every agent.
///
/// Variable names: `z1..`, `x1..`, `v1..`, `w1..`; `steady_zero`
/// additionally sees `s`, the frozen output.
#[derive(Debug, Clone)]
pub struct ExprAgent {
    r: usize,
    n_z: usize,
    n_v: usize,
    n_w: usize,
    f0: Vec<CompiledExpr>,
    drift: Vec<CompiledExpr>,
    steady_zero: Vec<CompiledExpr>,
    coeffs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprAgentSource {
    pub n_v: usize,
    pub n_w: usize,
    pub f0: Vec<String>,
    pub drift: Vec<String>,
    pub steady_zero: Vec<String>,
    pub im_coeffs: Vec<Vec<f64>>,
}

fn names(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |k| format!("{prefix}{k}"))
}

impl ExprAgent {
    pub fn compile(src: &ExprAgentSource) -> Result<Self> {
        let n_z = src.f0.len();
        let r = src.drift.len();
        if r == 0 {
            return Err(Error::Config("custom plant needs at least one drift term (relative degree ≥ 1)".into()));
        }
        if src.steady_zero.len() != n_z {
            return Err(Error::Config(format!(
                "custom plant: steady_zero has {} entries but f0 has {n_z}",
                src.steady_zero.len()
            )));
        }
        if src.im_coeffs.len() != r {
            return Err(Error::Config(format!(
                "custom plant: im_coeffs must have one entry per level ({r}), got {}",
                src.im_coeffs.len()
            )));
        }
        let tail: Vec<String> = names("v", src.n_v).chain(names("w", src.n_w)).collect();
        let mut f0_vars: Vec<String> = names("z", n_z).collect();
        f0_vars.push("x1".into());
        f0_vars.extend(tail.iter().cloned());
        let f0 = src
            .f0
            .iter()
            .map(|e| CompiledExpr::parse(e, &f0_vars))
            .collect::<Result<Vec<_>>>()?;
        let drift = src
            .drift
            .iter()
            .enumerate()
            .map(|(k, e)| {
                // level s only sees x1..x_s, enforcing the triangular structure
                let vars: Vec<String> = names("z", n_z).chain(names("x", k + 1)).chain(tail.iter().cloned()).collect();
                CompiledExpr::parse(e, &vars)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sz_vars = vec!["s".to_string()];
        sz_vars.extend(tail.iter().cloned());
        let steady_zero = src
            .steady_zero
            .iter()
            .map(|e| CompiledExpr::parse(e, &sz_vars))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExprAgent {
            r,
            n_z,
            n_v: src.n_v,
            n_w: src.n_w,
            f0,
            drift,
            steady_zero,
            coeffs: src.im_coeffs.clone(),
        })
    }
}

impl AgentDynamics for ExprAgent {
    fn relative_degree(&self) -> usize {
        self.r
    }
    fn zero_dim(&self) -> usize {
        self.n_z
    }
    fn exo_dim(&self) -> usize {
        self.n_v
    }
    fn uncertainty_dim(&self) -> usize {
        self.n_w
    }

    fn f0(&self, z: &[f64], x1: f64, v: &[f64], w: &[f64], dz: &mut [f64]) {
        let mut vals = Vec::with_capacity(self.n_z + 1 + self.n_v + self.n_w);
        vals.extend_from_slice(z);
        vals.push(x1);
        vals.extend_from_slice(v);
        vals.extend_from_slice(w);
        for (d, e) in dz.iter_mut().zip(&self.f0) {
            *d = e.eval(&vals);
        }
    }

    fn drift(&self, s: usize, z: &[f64], x: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let mut vals = Vec::with_capacity(self.n_z + s + self.n_v + self.n_w);
        vals.extend_from_slice(z);
        vals.extend_from_slice(&x[..s]);
        vals.extend_from_slice(v);
        vals.extend_from_slice(w);
        self.drift[s - 1].eval(&vals)
    }

    fn steady_zero(&self, s: f64, v: &[f64], w: &[f64]) -> Vec<f64> {
        let mut vals = Vec::with_capacity(1 + self.n_v + self.n_w);
        vals.push(s);
        vals.extend_from_slice(v);
        vals.extend_from_slice(w);
        self.steady_zero.iter().map(|e| e.eval(&vals)).collect()
    }

    fn im_coeffs(&self) -> Vec<Vec<f64>> {
        self.coeffs.clone()
    }
}

/// All agents of the network.
#[derive(Debug, Clone)]
pub struct PlantModel {
    agents: Vec<Arc<dyn AgentDynamics>>,
}

impl PlantModel {
    pub fn new(agents: Vec<Arc<dyn AgentDynamics>>) -> Result<Self> {
        let first = agents
            .first()
            .ok_or_else(|| Error::InvalidParameter("plant needs at least one agent".into()))?;
        let (r, nv) = (first.relative_degree(), first.exo_dim());
        if agents.iter().any(|a| a.relative_degree() != r || a.exo_dim() != nv) {
            return Err(Error::InvalidParameter("agents must share relative degree and exosystem dimension".into()));
        }
        Ok(PlantModel { agents })
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent(&self, i: usize) -> &dyn AgentDynamics {
        &*self.agents[i]
    }

    pub fn agent_arc(&self, i: usize) -> Arc<dyn AgentDynamics> {
        Arc::clone(&self.agents[i])
    }

    pub fn relative_degree(&self) -> usize {
        self.agents[0].relative_degree()
    }

    pub fn exo_dim(&self) -> usize {
        self.agents[0].exo_dim()
    }

    /// Checks `f0(0,0,0,w) = 0` and `f_s(0,…,0,w) = 0` on the given samples.
    pub fn check_origin(&self, w_samples: &[Vec<f64>]) -> Result<()> {
        for (i, a) in self.agents.iter().enumerate() {
            let z0 = vec![0.0; a.zero_dim()];
            let v0 = vec![0.0; a.exo_dim()];
            let x0 = vec![0.0; a.relative_degree()];
            for w in w_samples {
                let mut dz = vec![0.0; a.zero_dim()];
                a.f0(&z0, 0.0, &v0, w, &mut dz);
                let mut worst = dz.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                for s in 1..=a.relative_degree() {
                    worst = worst.max(a.drift(s, &z0, &x0, &v0, w).abs());
                }
                if !(worst <= ORIGIN_TOL) {
                    return Err(Error::InvalidParameter(format!(
                        "agent {i}: dynamics do not vanish at the origin (|f| = {worst:e} for w = {w:?})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds the benchmark plant; every `g1` must be negative.
pub fn example_plant(g: &[[f64; 6]]) -> Result<PlantModel> {
    for (i, gi) in g.iter().enumerate() {
        if gi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("agent {i}: g must be finite")));
        }
        if gi[0] >= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "agent {i}: plant constraint g1 < 0 violated (g1 = {})",
                gi[0]
            )));
        }
    }
    PlantModel::new(
        g.iter()
            .map(|gi| Arc::new(ExampleAgent { g: *gi }) as Arc<dyn AgentDynamics>)
            .collect(),
    )
}

/// Agent dynamics written into `dz` and `dx`.
pub fn plant_rhs_into(agent: &dyn AgentDynamics, z: &[f64], x: &[f64], u: f64, v: &[f64], w: &[f64], dz: &mut [f64], dx: &mut [f64]) {
    let r = x.len();
    agent.f0(z, x[0], v, w, dz);
    for s in 1..=r {
        let next = if s < r { x[s] } else { u };
        dx[s - 1] = agent.drift(s, z, x, v, w) + next;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    pub last_u: f64,
}

impl PlantState {
    pub fn y(&self) -> f64 {
        self.x[0]
    }
}

/// Returns `(ż, ẋ)`.
pub fn plant_rhs(agent: &dyn AgentDynamics, state: &PlantState, u: f64, v: &[f64], w: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut dz = vec![0.0; state.z.len()];
    let mut dx = vec![0.0; state.x.len()];
    plant_rhs_into(agent, &state.z, &state.x, u, v, w, &mut dz, &mut dx);
    if dz.iter().chain(&dx).any(|d| !d.is_finite()) {
        return Err(Error::NonFiniteState { t: f64::NAN });
    }
    Ok((dz, dx))
}

/// Axis-aligned box `[lo_k, hi_k]`.
pub type BoxBounds = Vec<(f64, f64)>;

pub fn validate_box(b: &[(f64, f64)], what: &str) -> Result<()> {
    for (k, &(lo, hi)) in b.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParameter(format!("{what}[{k}] = [{lo}, {hi}] is not a valid interval")));
        }
    }
    Ok(())
}

/// Uniform draw from the box.
pub fn sample_box(b: &[(f64, f64)], rng: &mut impl Rng) -> Vec<f64> {
    b.iter()
        .map(|&(lo, hi)| {
            let u: f64 = rng.random();
            lo + (hi - lo) * u
        })
        .collect()
}

/// Reproducible uniform sample of the uncertainty box.
pub fn sample_uncertainty(b: &[(f64, f64)], seed: u64) -> Vec<f64> {
    sample_box(b, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `v̇ = S v` with the initial set 𝕍₀.
#[derive(Debug, Clone, PartialEq)]
pub struct Exosystem {
    s: Matrix,
    v0_box: BoxBounds,
}

impl Exosystem {
    pub fn new(s: Matrix, v0_box: BoxBounds) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::Dimension("exosystem matrix must be square".into()));
        }
        if v0_box.len() != s.rows() {
            return Err(Error::Dimension(format!(
                "v0_box has {} intervals, exosystem dimension is {}",
                v0_box.len(),
                s.rows()
            )));
        }
        validate_box(&v0_box, "v0_box")?;
        if s.rows() > 0 {
            for lam in eigenvalues(&s)? {
                if lam.re.abs() > 1e-8 {
                    return Err(Error::InvalidParameter(format!(
                        "exosystem is not neutrally stable: eigenvalue {lam} has nonzero real part"
                    )));
                }
            }
        }
        Ok(Exosystem { s, v0_box })
    }

    /// The harmonic oscillator `v̇1 = v2, v̇2 = −v1`.
    pub fn rotation(v0_box: BoxBounds) -> Result<Self> {
        Exosystem::new(Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]), v0_box)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.rows()
    }

    pub fn v0_box(&self) -> &[(f64, f64)] {
        &self.v0_box
    }
}

pub fn exo_rhs(exo: &Exosystem, v: &[f64]) -> Vec<f64> {
    exo.s.mul_vec(v)
}

/// Steady-state maps of one agent for fixed `p*_i` and `w`.
#[derive(Debug, Clone)]
pub struct SteadyState {
    agent: Arc<dyn AgentDynamics>,
    p_star: f64,
    w: Vec<f64>,
    s: Matrix,
}

/// Builds the steady-state recursion of agent `agent` for equilibrium
/// strategy `p_star_i`.
pub fn steady_state_chain(agent: Arc<dyn AgentDynamics>, p_star_i: f64, w: &[f64], exo: &Exosystem) -> SteadyState {
    SteadyState {
        agent,
        p_star: p_star_i,
        w: w.to_vec(),
        s: exo.matrix().clone(),
    }
}

impl SteadyState {
    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn z_star(&self, v: &[f64]) -> Vec<f64> {
        self.agent.steady_zero(self.p_star, v, &self.w)
    }

    /// `[x⋆_2, …, x⋆_r, u⋆]`, i.e. the signal level `s` has to reproduce
    /// is entry `s − 1`.
    pub fn signals(&self, v: &[f64]) -> Vec<f64> {
        self.agent
            .steady_signals_closed_form(self.p_star, v, &self.w, &self.s)
            .unwrap_or_else(|| self.signals_numeric(v))
    }

    /// Finite-difference evaluation of the recursion, used for custom
    /// plants and as an independent check of closed forms.
    pub fn signals_numeric(&self, v: &[f64]) -> Vec<f64> {
        self.chain_upto(self.agent.relative_degree(), v)
    }

    /// `x⋆ = (p, x⋆_2, …, x⋆_r)` for current reference `p`.
    pub fn x_star(&self, p: f64, v: &[f64]) -> Vec<f64> {
        let mut out = vec![p];
        let sig = self.signals(v);
        out.extend_from_slice(&sig[..sig.len() - 1]);
        out
    }

    /// Signals of levels `1..=m`.
    fn chain_upto(&self, m: usize, v: &[f64]) -> Vec<f64> {
        let a = &*self.agent;
        let z = a.steady_zero(self.p_star, v, &self.w);
        if m == 1 {
            return vec![-a.drift(1, &z, &[self.p_star], v, &self.w)];
        }
        let mut prev = self.chain_upto(m - 1, v);
        let lie = self.lie_derivative(v, |vv| *self.chain_upto(m - 1, vv).last().unwrap());
        let mut x = vec![self.p_star];
        x.extend_from_slice(&prev);
        let next = lie - a.drift(m, &z, &x, v, &self.w);
        prev.push(next);
        prev
    }

    /// `(∂φ/∂v) S v` by a central difference along `Sv`.
    fn lie_derivative(&self, v: &[f64], phi: impl Fn(&[f64]) -> f64) -> f64 {
        let sv = self.s.mul_vec(v);
        let speed = norm2(&sv);
        if speed == 0.0 {
            return 0.0;
        }
        let delta = STEADY_FD_STEP / speed;
        let plus: Vec<f64> = v.iter().zip(&sv).map(|(a, b)| a + delta * b).collect();
        let minus: Vec<f64> = v.iter().zip(&sv).map(|(a, b)| a - delta * b).collect();
        (phi(&plus) - phi(&minus)) / (2.0 * delta)
    }
}
