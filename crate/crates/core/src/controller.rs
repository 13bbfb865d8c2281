//! Distributed dynamic state feedback and the gain-escalation loop.

use std::thread;

use crate::error::{Error, Result};
use crate::internal_model::ImLevel;
use crate::simulation::{simulate, Scenario, DIVERGENCE_NORM, TRACKING_THRESHOLD};

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    /// `k[i][s-1]` is `k_s` of agent i.
    pub k: Vec<Vec<f64>>,
}

impl ControllerGains {
    pub fn new(k: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in k.iter().enumerate() {
            if row.is_empty() || row.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
                return Err(Error::InvalidParameter(format!("controller gains of agent {} must be positive: {row:?}", i + 1)));
            }
        }
        Ok(ControllerGains { k })
    }

    pub fn uniform(n_agents: usize, r: usize, k: f64) -> Result<Self> {
        ControllerGains::new(vec![vec![k; r]; n_agents])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        ControllerGains {
            k: self.k.iter().map(|row| row.iter().map(|g| g * factor).collect()).collect(),
        }
    }
}

/// `Ψ_s η_s` for each level; `eta` concatenates `η_1..η_r`.
pub fn im_outputs(levels: &[ImLevel], eta: &[f64]) -> Vec<f64> {
    let mut off = 0;
    levels
        .iter()
        .map(|l| {
            let out = l.output(&eta[off..off + l.dim()]);
            off += l.dim();
            out
        })
        .collect()
}

/// `u = −Σ_s (k_s⋯k_r)(x_s − ref_s) + Ψ_r η_r` with `ref_1 = p_i` and
/// `ref_{s+1} = Ψ_s η_s`. With `ablate` every `Ψη` term is dropped.
pub fn control_law(k: &[f64], levels: &[ImLevel], x: &[f64], eta: &[f64], p_i: f64, ablate: bool) -> f64 {
    let r = x.len();
    let psi_eta = if ablate { vec![0.0; r] } else { im_outputs(levels, eta) };
    let mut u = psi_eta[r - 1];
    let mut gain = 1.0;
    for s in (0..r).rev() {
        gain *= k[s];
        let reference = if s == 0 { p_i } else { psi_eta[s - 1] };
        u -= gain * (x[s] - reference);
    }
    u
}

/// `ū` in transformed coordinates through the backstepping recursion
/// `x̂_1 = x̄_1`, `x̂_{s+1} = x̄_{s+1} + k_s x̂_s`, `ū = −k_r x̂_r`.
pub fn transformed_feedback(k: &[f64], x_bar: &[f64]) -> f64 {
    let r = k.len();
    let mut hat = x_bar[0];
    for s in 1..r {
        hat = x_bar[s] + k[s - 1] * hat;
    }
    -k[r - 1] * hat
}

/// Error coordinates relative to the regulated manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedState {
    pub z_bar: Vec<f64>,
    /// `x̄_1..x̄_r` followed by `x̄_{r+1} = ū`.
    pub x_bar: Vec<f64>,
    pub eta_tilde: Vec<Vec<f64>>,
}

impl TransformedState {
    pub fn max_abs(&self) -> f64 {
        self.z_bar
            .iter()
            .chain(&self.x_bar)
            .chain(self.eta_tilde.iter().flatten())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Maps plant and internal-model states into error coordinates given the
/// steady-state truth `z⋆` and `θ_s`.
#[allow(clippy::too_many_arguments)]
pub fn transform(levels: &[ImLevel], z: &[f64], x: &[f64], eta: &[f64], u: f64, z_star: &[f64], theta: &[Vec<f64>], p_i: f64) -> TransformedState {
    let r = x.len();
    let psi_eta = im_outputs(levels, eta);
    let z_bar = z.iter().zip(z_star).map(|(a, b)| a - b).collect();
    let mut x_bar = Vec::with_capacity(r + 1);
    x_bar.push(x[0] - p_i);
    for s in 1..r {
        x_bar.push(x[s] - psi_eta[s - 1]);
    }
    x_bar.push(u - psi_eta[r - 1]);
    let mut off = 0;
    let eta_tilde = levels
        .iter()
        .enumerate()
        .map(|(s, l)| {
            let block = &eta[off..off + l.dim()];
            off += l.dim();
            block
                .iter()
                .zip(&theta[s])
                .zip(&l.stabilizer.n)
                .map(|((e, th), n)| e - th - n * x_bar[s])
                .collect()
        })
        .collect();
    TransformedState { z_bar, x_bar, eta_tilde }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscalationPolicy {
    pub factor: f64,
    pub max_rounds: usize,
}

impl Default for EscalationPolicy {
    fn default() -> Self {
        EscalationPolicy {
            factor: 2.0,
            max_rounds: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Escalated {
    pub controller: ControllerGains,
    pub gamma1: f64,
    /// Number of times the gains were multiplied.
    pub rounds: usize,
}

/// Whether every seeded run of `scenario` stays bounded and ends with
/// `max_i |e_i(T)| ≤` [`TRACKING_THRESHOLD`].
pub fn passes(scenario: &Scenario, seeds: &[u64]) -> Result<bool> {
    let outcomes: Vec<Result<bool>> = thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                scope.spawn(move || {
                    let sc = scenario.with_seed(seed);
                    let traj = simulate(&sc, &sc.realize()?)?;
                    Ok(traj.diverged_at.is_none()
                        && traj.max_state_norm <= DIVERGENCE_NORM
                        && traj.max_final_error() <= TRACKING_THRESHOLD)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });
    for o in outcomes {
        if !o? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Multiplies every `k_s` and `γ₁` by `factor` until all seeded runs pass.
pub fn escalate_gains(scenario: &Scenario, initial: &ControllerGains, policy: EscalationPolicy, seeds: &[u64]) -> Result<Escalated> {
    if !(policy.factor > 1.0) {
        return Err(Error::InvalidParameter(format!("escalation factor must exceed 1, got {}", policy.factor)));
    }
    let mut gains = initial.clone();
    let mut gamma1 = scenario.generator.gamma1;
    for round in 0..=policy.max_rounds {
        let mut sc = scenario.clone();
        sc.controller = gains.clone();
        sc.generator.gamma1 = gamma1;
        if passes(&sc, seeds)? {
            return Ok(Escalated {
                controller: gains,
                gamma1,
                rounds: round,
            });
        }
        gains = gains.scaled(policy.factor);
        gamma1 *= policy.factor;
    }
    Err(Error::EscalationExhausted {
        rounds: policy.max_rounds,
    })
}
