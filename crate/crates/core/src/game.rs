//! Scalar-strategy N-player games: costs, pseudo-gradients, monotonicity
//! constants and a Nash equilibrium oracle.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{lu_solve, norm2, spectral_norm, symmetric_eigenvalues, Lu, Matrix};

/// Relative step for central differences of custom costs.
pub const FD_REL_STEP: f64 = 1e-6;
/// Residual target of the equilibrium oracle for affine pseudo-gradients.
pub const NE_TOL: f64 = 1e-10;
/// Residual target when gradients come from finite differences; the
/// differencing noise floor sits near 1e-10 times the cost scale.
pub const NE_TOL_FD: f64 = 1e-8;
pub const NE_MAX_ITER: usize = 100_000;
/// Random pairs drawn when estimating constants of custom games.
pub const CONSTANT_SAMPLES: usize = 10_000;
pub const LIPSCHITZ_SAFETY: f64 = 1.2;
pub const MONOTONE_SAFETY: f64 = 0.8;

/// Cost of one player evaluated on a full strategy profile.
pub type CostFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum GameKind {
    /// `J_i = (y_i − h1_i)² + y_i (h2_i Σ_j y_j + h3_i)`.
    QuadraticAggregative { h1: Vec<f64>, h2: Vec<f64>, h3: Vec<f64> },
    /// Arbitrary smooth costs; gradients by central differences. Constants
    /// are estimated on `sample_box` only.
    Custom { costs: Vec<CostFn>, sample_box: (f64, f64) },
}

#[derive(Clone)]
pub struct GameSpec {
    n: usize,
    kind: GameKind,
}

impl fmt::Debug for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GameKind::QuadraticAggregative { h1, h2, h3 } => f
                .debug_struct("QuadraticAggregative")
                .field("h1", h1)
                .field("h2", h2)
                .field("h3", h3)
                .finish(),
            GameKind::Custom { sample_box, .. } => f
                .debug_struct("Custom")
                .field("n", &self.n)
                .field("sample_box", sample_box)
                .finish(),
        }
    }
}

/// Strong-monotonicity and Lipschitz constants of the pseudo-gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientConstants {
    pub strong_mono: f64,
    pub lipschitz: f64,
}

impl GameSpec {
    pub fn quadratic(h1: Vec<f64>, h2: Vec<f64>, h3: Vec<f64>) -> Result<Self> {
        let n = h1.len();
        if n < 2 {
            return Err(Error::InvalidParameter(format!("game needs at least 2 players, got {n}")));
        }
        if h2.len() != n || h3.len() != n {
            return Err(Error::InvalidParameter(format!(
                "h1, h2, h3 must have equal length (got {}, {}, {})",
                n,
                h2.len(),
                h3.len()
            )));
        }
        if h1.iter().chain(&h2).chain(&h3).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("game coefficients must be finite".into()));
        }
        let game = GameSpec {
            n,
            kind: GameKind::QuadraticAggregative { h1, h2, h3 },
        };
        let lf = symmetric_eigenvalues(&game.quadratic_jacobian().unwrap().symmetric_part())?[0];
        if lf <= 0.0 {
            return Err(Error::NotStronglyMonotone(lf));
        }
        Ok(game)
    }

    pub fn custom(costs: Vec<CostFn>, sample_box: (f64, f64)) -> Result<Self> {
        let n = costs.len();
        if n < 2 {
            return Err(Error::InvalidParameter(format!("game needs at least 2 players, got {n}")));
        }
        if !(sample_box.0 < sample_box.1) {
            return Err(Error::InvalidParameter(format!("empty sampling box {sample_box:?}")));
        }
        Ok(GameSpec {
            n,
            kind: GameKind::Custom { costs, sample_box },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &GameKind {
        &self.kind
    }

    pub fn cost(&self, i: usize, profile: &[f64]) -> f64 {
        match &self.kind {
            GameKind::QuadraticAggregative { h1, h2, h3 } => {
                let y = profile[i];
                let sum: f64 = profile.iter().sum();
                (y - h1[i]).powi(2) + y * (h2[i] * sum + h3[i])
            }
            GameKind::Custom { costs, .. } => costs[i](profile),
        }
    }

    /// ∂J_i/∂y_i at `profile`.
    pub fn partial_gradient(&self, i: usize, profile: &[f64]) -> f64 {
        match &self.kind {
            GameKind::QuadraticAggregative { h1, h2, h3 } => {
                let y = profile[i];
                let sum: f64 = profile.iter().sum();
                2.0 * (y - h1[i]) + h2[i] * sum + h2[i] * y + h3[i]
            }
            GameKind::Custom { costs, .. } => central_difference(&*costs[i], profile, i),
        }
    }

    /// F(y), the stacked partial gradients.
    pub fn pseudo_gradient(&self, profile: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.partial_gradient(i, profile)).collect()
    }

    /// 𝐅(𝐩): entry i is ∇_i J_i evaluated on row i of `estimates`.
    pub fn extended_pseudo_gradient(&self, estimates: &Matrix) -> Vec<f64> {
        (0..self.n).map(|i| self.partial_gradient(i, estimates.row(i))).collect()
    }

    /// Constant Jacobian `G` of F for the quadratic kind (F(y) = G y + c).
    pub fn quadratic_jacobian(&self) -> Option<Matrix> {
        let GameKind::QuadraticAggregative { h2, .. } = &self.kind else {
            return None;
        };
        let n = self.n;
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = h2[i] + if i == j { 2.0 + h2[i] } else { 0.0 };
            }
        }
        Some(g)
    }

    /// Constant Jacobian of 𝐅 (N × N²) for the quadratic kind.
    pub fn quadratic_extended_jacobian(&self) -> Option<Matrix> {
        let g = self.quadratic_jacobian()?;
        let n = self.n;
        let mut ext = Matrix::zeros(n, n * n);
        for i in 0..n {
            for k in 0..n {
                ext[(i, i * n + k)] = g[(i, k)];
            }
        }
        Some(ext)
    }

    pub fn estimate_constants(&self) -> Result<GradientConstants> {
        let (strong_mono, lipschitz) = match &self.kind {
            GameKind::QuadraticAggregative { .. } => {
                let g = self.quadratic_jacobian().unwrap();
                let ext = self.quadratic_extended_jacobian().unwrap();
                let lf = symmetric_eigenvalues(&g.symmetric_part())?[0];
                let lbar = spectral_norm(&g)?.max(spectral_norm(&ext)?);
                (lf, lbar)
            }
            GameKind::Custom { sample_box, .. } => self.sample_constants(*sample_box),
        };
        if !(strong_mono > 0.0) {
            return Err(Error::NotStronglyMonotone(strong_mono));
        }
        Ok(GradientConstants {
            strong_mono,
            lipschitz: lipschitz.max(strong_mono),
        })
    }

    fn sample_constants(&self, (lo, hi): (f64, f64)) -> (f64, f64) {
        let n = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(0x6e61_7368);
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(lo..hi)).collect() };
        let mut mono = f64::INFINITY;
        let mut lip = 0.0f64;
        for _ in 0..CONSTANT_SAMPLES {
            let x = draw(n);
            let y = draw(n);
            let dxy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let d2 = norm2(&dxy);
            if d2 == 0.0 {
                continue;
            }
            let fx = self.pseudo_gradient(&x);
            let fy = self.pseudo_gradient(&y);
            let df: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
            mono = mono.min(crate::numerics::dot(&dxy, &df) / (d2 * d2));
            lip = lip.max(norm2(&df) / d2);

            let px = Matrix::from_vec(n, n, draw(n * n)).unwrap();
            let py = Matrix::from_vec(n, n, draw(n * n)).unwrap();
            let dp = (&px - &py).frobenius_norm();
            if dp > 0.0 {
                let ex = self.extended_pseudo_gradient(&px);
                let ey = self.extended_pseudo_gradient(&py);
                let de: Vec<f64> = ex.iter().zip(&ey).map(|(a, b)| a - b).collect();
                lip = lip.max(norm2(&de) / dp);
            }
        }
        (MONOTONE_SAFETY * mono, LIPSCHITZ_SAFETY * lip)
    }

    /// Unique Nash equilibrium of a strongly monotone game.
    pub fn solve_ne(&self) -> Result<Vec<f64>> {
        match &self.kind {
            GameKind::QuadraticAggregative { h1, h3, .. } => {
                let g = self.quadratic_jacobian().unwrap();
                let rhs: Vec<f64> = h1.iter().zip(h3).map(|(a, c)| 2.0 * a - c).collect();
                let mut p = lu_solve(&g, &rhs)?;
                // one refinement step pulls the residual to working precision
                let r = self.pseudo_gradient(&p);
                let dp = lu_solve(&g, &r)?;
                p.iter_mut().zip(&dp).for_each(|(pi, d)| *pi -= d);
                Ok(p)
            }
            GameKind::Custom { .. } => self.solve_ne_iterative(),
        }
    }

    fn solve_ne_iterative(&self) -> Result<Vec<f64>> {
        let n = self.n;
        let mut p = vec![0.0; n];
        let residual = |p: &[f64]| norm2(&self.pseudo_gradient(p));
        let mut r = residual(&p);
        for _ in 0..200 {
            if r <= NE_TOL_FD {
                return Ok(p);
            }
            let f = self.pseudo_gradient(&p);
            let jac = self.fd_jacobian(&p);
            let Ok(lu) = Lu::factor(&jac) else { break };
            let Ok(step) = lu.solve(&f) else { break };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..40 {
                let trial: Vec<f64> = p.iter().zip(&step).map(|(a, d)| a - t * d).collect();
                let rt = residual(&trial);
                if rt < r {
                    p = trial;
                    r = rt;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if r <= NE_TOL_FD {
            return Ok(p);
        }

        let c = self.estimate_constants()?;
        let rate = c.strong_mono / (c.lipschitz * c.lipschitz);
        for _ in 0..NE_MAX_ITER {
            let f = self.pseudo_gradient(&p);
            if norm2(&f) <= NE_TOL_FD {
                return Ok(p);
            }
            p.iter_mut().zip(&f).for_each(|(pi, fi)| *pi -= rate * fi);
        }
        Err(Error::NoConvergence {
            what: "Nash equilibrium forward-step iteration",
            iterations: NE_MAX_ITER,
        })
    }

    fn fd_jacobian(&self, p: &[f64]) -> Matrix {
        let n = self.n;
        let mut jac = Matrix::zeros(n, n);
        let mut q = p.to_vec();
        for j in 0..n {
            let h = FD_REL_STEP * (1.0 + p[j].abs());
            q[j] = p[j] + h;
            let fp = self.pseudo_gradient(&q);
            q[j] = p[j] - h;
            let fm = self.pseudo_gradient(&q);
            q[j] = p[j];
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    /// Tolerance the oracle targets for this game kind.
    pub fn ne_tolerance(&self) -> f64 {
        match self.kind {
            GameKind::QuadraticAggregative { .. } => NE_TOL,
            GameKind::Custom { .. } => NE_TOL_FD,
        }
    }
}

fn central_difference(f: &dyn Fn(&[f64]) -> f64, at: &[f64], i: usize) -> f64 {
    let h = FD_REL_STEP * (1.0 + at[i].abs());
    let mut q = at.to_vec();
    q[i] = at[i] + h;
    let fp = f(&q);
    q[i] = at[i] - h;
    let fm = f(&q);
    (fp - fm) / (2.0 * h)
}
