//! Distributed gradient-play reference generator.
//!
//! Agent i keeps a row `𝐩_i` of estimates of every agent's strategy; its own
//! entry `𝐩_i[i]` is the reference `p_i` that its output is asked to track.
//! Each agent only evaluates its own partial gradient and reads neighbour
//! rows through the Laplacian coupling.

use crate::error::{Error, Result};
use crate::game::{GameSpec, GradientConstants};
use crate::graph::{CommGraph, CONNECTIVITY_EPS};
use crate::numerics::{kron, Matrix, OdeSystem, Rk4};

/// Default multiplier applied to the lower bound on γ₂.
pub const GAMMA2_MARGIN: f64 = 1.25;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorState {
    /// Row i is agent i's estimate vector; the diagonal holds the references.
    pub estimates: Matrix,
}

impl GeneratorState {
    pub fn zeros(n: usize) -> Self {
        GeneratorState {
            estimates: Matrix::zeros(n, n),
        }
    }

    /// Every agent holding the same profile.
    pub fn consensus(profile: &[f64]) -> Self {
        let n = profile.len();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.row_mut(i).copy_from_slice(profile);
        }
        GeneratorState { estimates: m }
    }

    pub fn references(&self) -> Vec<f64> {
        (0..self.estimates.rows()).map(|i| self.estimates[(i, i)]).collect()
    }

    /// ‖𝐩 − 𝟙 ⊗ p*‖.
    pub fn distance_to(&self, p_star: &[f64]) -> f64 {
        consensus_distance(self.estimates.as_slice(), p_star)
    }
}

pub(crate) fn consensus_distance(stacked: &[f64], p_star: &[f64]) -> f64 {
    let n = p_star.len();
    stacked
        .iter()
        .enumerate()
        .map(|(idx, v)| (v - p_star[idx % n]).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorGains {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl GeneratorGains {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1 > 0.0 && gamma2 > 0.0 && gamma1.is_finite() && gamma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "generator gains must be positive, got gamma1 = {gamma1}, gamma2 = {gamma2}"
            )));
        }
        Ok(GeneratorGains { gamma1, gamma2 })
    }
}

/// Smallest γ₂ for which exponential convergence is guaranteed:
/// `(l̄_F² / l_F + l̄_F) / λ₂(ℒ)`.
pub fn min_gamma2(constants: &GradientConstants, graph: &CommGraph) -> Result<f64> {
    let lambda2 = graph.lambda2()?;
    if lambda2 <= CONNECTIVITY_EPS {
        return Err(Error::Disconnected { lambda2 });
    }
    let (l, lbar) = (constants.strong_mono, constants.lipschitz);
    Ok((lbar * lbar / l + lbar) / lambda2)
}

/// Per-agent right-hand side written into `out` (both row-major N×N).
pub fn generator_rhs_into(game: &GameSpec, graph: &CommGraph, gains: GeneratorGains, p: &[f64], out: &mut [f64]) {
    let n = graph.n();
    let coupling = gains.gamma1 * gains.gamma2;
    for i in 0..n {
        let row_i = &p[i * n..(i + 1) * n];
        for k in 0..n {
            let mut acc = 0.0;
            for (j, a) in graph.neighbors(i) {
                acc += a * (row_i[k] - p[j * n + k]);
            }
            out[i * n + k] = -coupling * acc;
        }
        out[i * n + i] -= gains.gamma1 * game.partial_gradient(i, row_i);
    }
}

pub fn generator_rhs(game: &GameSpec, graph: &CommGraph, gains: GeneratorGains, state: &GeneratorState) -> Matrix {
    let n = graph.n();
    let mut out = Matrix::zeros(n, n);
    generator_rhs_into(game, graph, gains, state.estimates.as_slice(), out.as_mut_slice());
    out
}

/// The same vector field written as `−γ₁ ℛᵀ 𝐅(𝐩) − γ₁γ₂ (ℒ ⊗ I_N) 𝐩` with
/// explicit selector and Kronecker matrices.
pub fn generator_rhs_stacked(game: &GameSpec, graph: &CommGraph, gains: GeneratorGains, state: &GeneratorState) -> Matrix {
    let n = graph.n();
    let mut selector = Matrix::zeros(n, n * n);
    for i in 0..n {
        selector[(i, i * n + i)] = 1.0;
    }
    let big_l = kron(&graph.laplacian(), &Matrix::identity(n));
    let f = game.extended_pseudo_gradient(&state.estimates);
    let grad_part = selector.transpose().mul_vec(&f);
    let cons_part = big_l.mul_vec(state.estimates.as_slice());
    let data = grad_part
        .iter()
        .zip(&cons_part)
        .map(|(g, c)| -gains.gamma1 * g - gains.gamma1 * gains.gamma2 * c)
        .collect();
    Matrix::from_vec(n, n, data).unwrap()
}

struct GeneratorOde<'a> {
    game: &'a GameSpec,
    graph: &'a CommGraph,
    gains: GeneratorGains,
}

impl OdeSystem for GeneratorOde<'_> {
    fn dim(&self) -> usize {
        self.graph.n() * self.graph.n()
    }
    fn rhs(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        generator_rhs_into(self.game, self.graph, self.gains, x, dx);
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorRun {
    pub times: Vec<f64>,
    /// ‖𝐩(t) − 𝟙 ⊗ p*‖ at each recorded time.
    pub distances: Vec<f64>,
    pub final_state: GeneratorState,
    pub p_star: Vec<f64>,
    /// Set when γ₂ is below [`min_gamma2`]; convergence is then not guaranteed.
    pub gamma2_warning: Option<String>,
}

/// Integrates the generator alone with RK4 and records the distance to the
/// equilibrium after every step.
pub fn run_generator(
    game: &GameSpec,
    graph: &CommGraph,
    gains: GeneratorGains,
    init: &GeneratorState,
    t_final: f64,
    h: f64,
) -> Result<GeneratorRun> {
    let n = graph.n();
    if game.n() != n {
        return Err(Error::Dimension(format!("game has {} players, graph {} agents", game.n(), n)));
    }
    if !(h > 0.0 && t_final > 0.0) {
        return Err(Error::InvalidParameter("horizon and step must be positive".into()));
    }
    let constants = game.estimate_constants()?;
    let bound = min_gamma2(&constants, graph)?;
    let gamma2_warning = (gains.gamma2 < bound)
        .then(|| format!("gamma2 = {} is below the sufficient bound {bound:.6}", gains.gamma2));
    let p_star = game.solve_ne()?;

    let ode = GeneratorOde { game, graph, gains };
    let steps = (t_final / h).round() as usize;
    let mut x = init.estimates.as_slice().to_vec();
    let mut rk = Rk4::new(x.len());
    let mut times = Vec::with_capacity(steps + 1);
    let mut distances = Vec::with_capacity(steps + 1);
    times.push(0.0);
    distances.push(consensus_distance(&x, &p_star));
    for k in 0..steps {
        let t = k as f64 * h;
        rk.step(&ode, t, &mut x, h)?;
        times.push((k + 1) as f64 * h);
        distances.push(consensus_distance(&x, &p_star));
    }
    Ok(GeneratorRun {
        times,
        distances,
        final_state: GeneratorState {
            estimates: Matrix::from_vec(n, n, x).unwrap(),
        },
        p_star,
        gamma2_warning,
    })
}
