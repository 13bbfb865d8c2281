//! Linear internal models reproducing the steady-state signals of each
//! agent's backstepping chain.
//!
//! For a level whose steady signal satisfies `d^n x⋆/dt^n = ς₁x⋆ + ς₂ẋ⋆ + …`,
//! the companion pair `(Φ, Γ)` generates it, and a Hurwitz pair `(M, N)`
//! together with the Sylvester solution `T` of `TΦ − MT = NΓ` yields the
//! output map `Ψ = ΓT⁻¹` used by `η̇ = Mη + N·driving`.

use crate::error::{Error, Result};
use crate::numerics::{characteristic_polynomial, eigenvalues, kron, lu_solve, min_singular_value, polynomial_roots, Lu, Matrix, Rk4, PIVOT_EPS, RESID_TOL};
use crate::plant::PlantModel;

/// Largest admissible |Re λ| for a companion root.
pub const SPECTRUM_RE_TOL: f64 = 1e-8;
/// Smallest admissible separation between companion roots.
pub const ROOT_SEPARATION: f64 = 1e-6;
/// M must have every eigenvalue with real part below `-HURWITZ_MARGIN`.
pub const HURWITZ_MARGIN: f64 = 1e-6;
/// Rank threshold for controllability and observability matrices.
pub const RANK_TOL: f64 = 1e-8;
/// Fit window used when the companion has no oscillatory modes.
const DEFAULT_FIT_WINDOW: f64 = 2.0;
/// Upper bound on samples entering the least-squares fit.
const MAX_FIT_SAMPLES: usize = 800;

#[derive(Debug, Clone, PartialEq)]
pub struct CompanionPair {
    pub phi: Matrix,
    /// 1×n, `(1, 0, …, 0)`.
    pub gamma: Matrix,
    pub coeffs: Vec<f64>,
}

impl CompanionPair {
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }
}

/// Builds `Φ` with ones on the superdiagonal and last row `ς`.
pub fn companion_from_coeffs(coeffs: &[f64]) -> Result<CompanionPair> {
    let n = coeffs.len();
    if n == 0 {
        return Err(Error::InvalidSpectrum("need at least one coefficient".into()));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidSpectrum(format!("non-finite coefficient in {coeffs:?}")));
    }
    let phi = companion_matrix(coeffs);
    // λⁿ − ςₙλⁿ⁻¹ − … − ς₁
    let mut poly: Vec<f64> = coeffs.iter().map(|c| -c).collect();
    poly.push(1.0);
    let roots = polynomial_roots(&poly)?;
    for r in &roots {
        if r.re.abs() > SPECTRUM_RE_TOL {
            return Err(Error::InvalidSpectrum(format!(
                "root {r} of the steady-state polynomial has nonzero real part (coefficients {coeffs:?})"
            )));
        }
    }
    for (a, ra) in roots.iter().enumerate() {
        for rb in &roots[a + 1..] {
            if (ra - rb).norm() < ROOT_SEPARATION {
                return Err(Error::InvalidSpectrum(format!(
                    "repeated root {ra} in the steady-state polynomial (coefficients {coeffs:?})"
                )));
            }
        }
    }
    let mut gamma = Matrix::zeros(1, n);
    gamma[(0, 0)] = 1.0;
    Ok(CompanionPair {
        phi,
        gamma,
        coeffs: coeffs.to_vec(),
    })
}

fn companion_matrix(last_row: &[f64]) -> Matrix {
    let n = last_row.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n - 1 {
        m[(i, i + 1)] = 1.0;
    }
    m.row_mut(n - 1).copy_from_slice(last_row);
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerPair {
    pub m: Matrix,
    pub n: Vec<f64>,
}

impl StabilizerPair {
    /// Validates that `M` is Hurwitz and `(M, N)` controllable.
    pub fn new(m: Matrix, n: Vec<f64>) -> Result<Self> {
        if !m.is_square() || m.rows() != n.len() || n.is_empty() {
            return Err(Error::Dimension(format!(
                "stabilizer M is {}x{} but N has length {}",
                m.rows(),
                m.cols(),
                n.len()
            )));
        }
        if !m.is_finite() || n.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidStabilizer("non-finite entries".into()));
        }
        for lam in eigenvalues(&m)? {
            if lam.re >= -HURWITZ_MARGIN {
                return Err(Error::InvalidStabilizer(format!("M is not Hurwitz: eigenvalue {lam}")));
            }
        }
        let sigma = min_singular_value(&controllability_matrix(&m, &n))?;
        if sigma <= RANK_TOL {
            return Err(Error::InvalidStabilizer(format!(
                "(M, N) is not controllable (smallest singular value {sigma:e})"
            )));
        }
        Ok(StabilizerPair { m, n })
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }
}

/// `[N, MN, …, Mⁿ⁻¹N]`.
pub fn controllability_matrix(m: &Matrix, n: &[f64]) -> Matrix {
    let d = n.len();
    let mut out = Matrix::zeros(d, d);
    let mut col = n.to_vec();
    for j in 0..d {
        for i in 0..d {
            out[(i, j)] = col[i];
        }
        col = m.mul_vec(&col);
    }
    out
}

/// Rows `Γ, ΓΦ, …, ΓΦⁿ⁻¹`.
pub fn observability_matrix(pair: &CompanionPair) -> Matrix {
    let d = pair.dim();
    let mut out = Matrix::zeros(d, d);
    let mut row = pair.gamma.row(0).to_vec();
    let phi_t = pair.phi.transpose();
    for i in 0..d {
        out.row_mut(i).copy_from_slice(&row);
        row = phi_t.mul_vec(&row);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StabilizerPreset {
    /// Characteristic polynomial `∏_{k=1}^{n} (λ + k)`.
    #[default]
    Factorial,
    /// As `Factorial`, except `(λ + 1)²(λ + 3)` for n = 3; these are the
    /// matrices of the four-agent benchmark.
    Benchmark,
}

/// Companion-form `M` with the preset characteristic polynomial, `N = eₙ`.
pub fn default_stabilizer(n: usize, preset: StabilizerPreset) -> StabilizerPair {
    assert!(n >= 1, "stabilizer dimension must be at least 1");
    let roots: Vec<f64> = match (preset, n) {
        (StabilizerPreset::Benchmark, 3) => vec![1.0, 1.0, 3.0],
        _ => (1..=n).map(|k| k as f64).collect(),
    };
    // expand ∏(λ + r), lowest degree first
    let mut poly = vec![1.0];
    for r in roots {
        let mut next = vec![0.0; poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k] += r * c;
            next[k + 1] += c;
        }
        poly = next;
    }
    let last: Vec<f64> = poly[..n].iter().map(|c| -c).collect();
    let mut e_n = vec![0.0; n];
    e_n[n - 1] = 1.0;
    StabilizerPair {
        m: companion_matrix(&last),
        n: e_n,
    }
}

/// One synthesized internal model.
#[derive(Debug, Clone, PartialEq)]
pub struct ImLevel {
    pub companion: CompanionPair,
    pub stabilizer: StabilizerPair,
    pub t: Matrix,
    pub psi: Vec<f64>,
    /// `‖TΦ − MT − NΓ‖_F`.
    pub residual: f64,
}

impl ImLevel {
    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    /// `Ψ·η`.
    #[inline]
    pub fn output(&self, eta: &[f64]) -> f64 {
        self.psi.iter().zip(eta).map(|(a, b)| a * b).sum()
    }
}

/// Solves `TΦ − MT = NΓ` and returns the level with `Ψ = ΓT⁻¹`.
pub fn solve_sylvester(companion: &CompanionPair, stabilizer: &StabilizerPair) -> Result<ImLevel> {
    let n = companion.dim();
    if stabilizer.dim() != n {
        return Err(Error::Dimension(format!(
            "stabilizer dimension {} does not match companion dimension {n}",
            stabilizer.dim()
        )));
    }
    let obs = min_singular_value(&observability_matrix(companion))?;
    if obs <= RANK_TOL {
        return Err(Error::InvalidSpectrum(format!("(Γ, Φ) is not observable ({obs:e})")));
    }
    let (phi, m) = (&companion.phi, &stabilizer.m);
    let ident = Matrix::identity(n);
    let big = &kron(&phi.transpose(), &ident) - &kron(&ident, m);
    let ng = &Matrix::column(&stabilizer.n) * &companion.gamma;
    // column-major vec
    let rhs: Vec<f64> = (0..n * n).map(|k| ng[(k % n, k / n)]).collect();
    let sol = lu_solve(&big, &rhs)?;
    let mut t = Matrix::zeros(n, n);
    for (k, v) in sol.into_iter().enumerate() {
        t[(k % n, k / n)] = v;
    }
    let lu_t = Lu::factor(&t).map_err(|e| match e {
        Error::SingularMatrix { pivot, .. } => Error::SingularT(pivot),
        other => other,
    })?;
    if lu_t.min_pivot() < PIVOT_EPS {
        return Err(Error::SingularT(lu_t.min_pivot()));
    }
    // Ψ T = Γ  ⇔  Tᵀ Ψᵀ = Γᵀ
    let psi = lu_solve(&t.transpose(), companion.gamma.row(0))?;
    let resid = &(&(&t * phi) - &(m * &t)) - &ng;
    let residual = resid.frobenius_norm();
    if residual > RESID_TOL * (1.0 + ng.frobenius_norm()) {
        return Err(Error::NoConvergence {
            what: "Sylvester solve residual",
            iterations: 1,
        });
    }
    Ok(ImLevel {
        companion: companion.clone(),
        stabilizer: stabilizer.clone(),
        t,
        psi,
        residual,
    })
}

/// `M·η + N·driving` written into `out`.
#[inline]
pub fn im_rhs_into(stabilizer: &StabilizerPair, eta: &[f64], driving: f64, out: &mut [f64]) {
    let n = stabilizer.dim();
    for i in 0..n {
        out[i] = stabilizer.m.row(i).iter().zip(eta).map(|(a, b)| a * b).sum::<f64>() + stabilizer.n[i] * driving;
    }
}

pub fn im_rhs(level: &ImLevel, eta: &[f64], driving: f64) -> Vec<f64> {
    let mut out = vec![0.0; level.dim()];
    im_rhs_into(&level.stabilizer, eta, driving, &mut out);
    out
}

/// Length of the fit window: one period of the slowest oscillatory mode.
fn fit_window(companion: &CompanionPair) -> f64 {
    let mut poly: Vec<f64> = companion.coeffs.iter().map(|c| -c).collect();
    poly.push(1.0);
    let slowest = polynomial_roots(&poly)
        .unwrap_or_default()
        .iter()
        .map(|r| r.im.abs())
        .filter(|w| *w > ROOT_SEPARATION)
        .fold(f64::INFINITY, f64::min);
    if slowest.is_finite() {
        2.0 * std::f64::consts::PI / slowest
    } else {
        DEFAULT_FIT_WINDOW
    }
}

/// Companion-coordinate state `ξ(0) = (s, ṡ, …, s⁽ⁿ⁻¹⁾)(0)` of a signal
/// generated by `Φ`, fitted by least squares to uniform samples
/// `signal[k] = s(k·dt)` over one period of the slowest mode.
pub fn fit_initial_state(companion: &CompanionPair, signal: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = companion.dim();
    if signal.is_empty() || !(dt > 0.0) {
        return Err(Error::InvalidParameter("fit needs samples and a positive step".into()));
    }
    let window = fit_window(companion);
    let count = ((window / dt).ceil() as usize + 1).min(signal.len());
    let stride = count.div_ceil(MAX_FIT_SAMPLES).max(1);
    // basis row b(t) = Γ e^{Φt}, propagated by ḃ = Φᵀ b
    let phi_t = companion.phi.transpose();
    let sys = (n, |_t: f64, b: &[f64], db: &mut [f64]| db.copy_from_slice(&phi_t.mul_vec(b)));
    let mut rk = Rk4::new(n);
    let mut b = companion.gamma.row(0).to_vec();
    let mut normal = Matrix::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for (k, &s) in signal.iter().enumerate().take(count) {
        if k % stride == 0 {
            for i in 0..n {
                rhs[i] += b[i] * s;
                for j in 0..n {
                    normal[(i, j)] += b[i] * b[j];
                }
            }
        }
        if k + 1 < count {
            rk.step(&sys, k as f64 * dt, &mut b, dt)?;
        }
    }
    lu_solve(&normal, &rhs)
}

/// Fits `θ(0) = T ξ(0)` from the sampled steady-state signal, integrates
/// `θ̇ = TΦT⁻¹θ` and returns `max_t |Ψθ(t) − signal(t)|`.
///
/// Returns infinity when the fit itself is impossible (e.g. too few samples).
pub fn verify_reproduction(level: &ImLevel, signal: &[f64], dt: f64) -> f64 {
    let Ok(xi0) = fit_initial_state(&level.companion, signal, dt) else {
        return f64::INFINITY;
    };
    let Ok(t_inv) = level.t.inverse() else {
        return f64::INFINITY;
    };
    let a = &(&level.t * &level.companion.phi) * &t_inv;
    let n = level.dim();
    let sys = (n, |_t: f64, th: &[f64], dth: &mut [f64]| dth.copy_from_slice(&a.mul_vec(th)));
    let mut theta = level.t.mul_vec(&xi0);
    let mut rk = Rk4::new(n);
    let mut worst = 0.0f64;
    for (k, &s) in signal.iter().enumerate() {
        worst = worst.max((level.output(&theta) - s).abs());
        if k + 1 < signal.len() && rk.step(&sys, k as f64 * dt, &mut theta, dt).is_err() {
            return f64::INFINITY;
        }
    }
    worst
}

/// Per-agent, per-level override of the stabilizer pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerOverride {
    pub agent: usize,
    /// 1-based level.
    pub level: usize,
    pub pair: StabilizerPair,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InternalModelConfig {
    pub preset: StabilizerPreset,
    pub overrides: Vec<StabilizerOverride>,
    /// Replaces the plant's ς per level for every agent.
    pub coeffs: Option<Vec<Vec<f64>>>,
}

/// `levels[i][s-1]` is agent i's model for level s.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalModelBank {
    pub levels: Vec<Vec<ImLevel>>,
}

impl InternalModelBank {
    pub fn agent(&self, i: usize) -> &[ImLevel] {
        &self.levels[i]
    }

    /// Total η dimension of agent i.
    pub fn eta_dim(&self, i: usize) -> usize {
        self.levels[i].iter().map(ImLevel::dim).sum()
    }
}

pub fn synthesize_bank(plant: &PlantModel, config: &InternalModelConfig) -> Result<InternalModelBank> {
    let r = plant.relative_degree();
    if let Some(c) = &config.coeffs {
        if c.len() != r {
            return Err(Error::Config(format!("internal_model.coeffs needs {r} levels, got {}", c.len())));
        }
    }
    for o in &config.overrides {
        if o.agent >= plant.n_agents() || o.level == 0 || o.level > r {
            return Err(Error::Config(format!(
                "internal_model override for agent {} level {} is out of range",
                o.agent, o.level
            )));
        }
    }
    let mut levels = Vec::with_capacity(plant.n_agents());
    for i in 0..plant.n_agents() {
        let coeffs = config.coeffs.clone().unwrap_or_else(|| plant.agent(i).im_coeffs());
        let mut agent_levels = Vec::with_capacity(r);
        for (s, c) in coeffs.iter().enumerate() {
            let level = (|| {
                let companion = companion_from_coeffs(c)?;
                let stabilizer = match config.overrides.iter().find(|o| o.agent == i && o.level == s + 1) {
                    Some(o) => o.pair.clone(),
                    None => default_stabilizer(companion.dim(), config.preset),
                };
                solve_sylvester(&companion, &stabilizer)
            })()
            .map_err(|e| e.in_component(format!("internal model (agent {}, level {})", i + 1, s + 1)))?;
            agent_levels.push(level);
        }
        levels.push(agent_levels);
    }
    Ok(InternalModelBank { levels })
}

/// Monic characteristic polynomial coefficients of `M`, lowest degree first.
pub fn stabilizer_polynomial(pair: &StabilizerPair) -> Vec<f64> {
    characteristic_polynomial(&pair.m)
}
