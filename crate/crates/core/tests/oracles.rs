//! Reference values checked against independent computations.

use approx::assert_abs_diff_eq;
use nashtrack::game::GameSpec;
use nashtrack::generator::{min_gamma2, run_generator, GeneratorGains, GeneratorState};
use nashtrack::graph::CommGraph;
use nashtrack::internal_model::{companion_from_coeffs, default_stabilizer, solve_sylvester, StabilizerPreset};
use nashtrack::numerics::{characteristic_polynomial, eigenvalues, integrate, norm2, rk4_step};

fn quadratic(h1: &[f64], h2: &[f64], h3: &[f64]) -> GameSpec {
    GameSpec::quadratic(h1.to_vec(), h2.to_vec(), h3.to_vec()).unwrap()
}

#[test]
fn benchmark_output_maps() {
    let cases: [(&[f64], &[f64]); 2] = [
        (&[0.0, -1.0, 0.0], &[3.0, 6.0, 5.0]),
        (&[0.0, -4.0, 0.0, -5.0, 0.0], &[120.0, 270.0, 225.0, 80.0, 15.0]),
    ];
    for (coeffs, expected) in cases {
        let c = companion_from_coeffs(coeffs).unwrap();
        let level = solve_sylvester(&c, &default_stabilizer(c.dim(), StabilizerPreset::Benchmark)).unwrap();
        for (a, b) in level.psi.iter().zip(expected) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-8);
        }
        assert!(level.residual <= 1e-10);
    }
}

#[test]
fn output_map_is_difference_of_characteristic_polynomials() {
    // for companion Φ and companion M sharing N = eₙ, Ψ must equal the
    // coefficient gap between det(λI − M) and det(λI − Φ)
    for coeffs in [vec![0.0, -1.0, 0.0], vec![0.0, -4.0, 0.0, -5.0, 0.0], vec![0.0], vec![-9.0, 0.0]] {
        let c = companion_from_coeffs(&coeffs).unwrap();
        for preset in [StabilizerPreset::Benchmark, StabilizerPreset::Factorial] {
            let s = default_stabilizer(c.dim(), preset);
            let level = solve_sylvester(&c, &s).unwrap();
            let pm = characteristic_polynomial(&s.m);
            let pphi = characteristic_polynomial(&c.phi);
            for k in 0..c.dim() {
                assert_abs_diff_eq!(level.psi[k], pm[k] - pphi[k], epsilon = 1e-8);
            }
        }
    }
}

#[test]
fn benchmark_stabilizer_spectra() {
    let mut re: Vec<f64> = eigenvalues(&default_stabilizer(5, StabilizerPreset::Benchmark).m)
        .unwrap()
        .iter()
        .map(|z| z.re)
        .collect();
    re.sort_by(f64::total_cmp);
    for (a, b) in re.iter().zip([-5.0, -4.0, -3.0, -2.0, -1.0]) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-8);
    }
}

#[test]
fn equilibrium_matches_fixed_point_iteration() {
    let game = quadratic(&[2.0, 4.0, -2.0, 1.0], &[2.0; 4], &[0.5, -0.5, 0.2, 0.0]);
    let p = game.solve_ne().unwrap();
    assert!(norm2(&game.pseudo_gradient(&p)) <= 1e-10);
    // independent route: damped best-response sweeps
    let mut q = vec![0.0; 4];
    for _ in 0..20_000 {
        let f = game.pseudo_gradient(&q);
        for (qi, fi) in q.iter_mut().zip(&f) {
            *qi -= 0.02 * fi;
        }
    }
    for (a, b) in p.iter().zip(&q) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }
}

#[test]
fn decoupled_equilibrium_is_h1() {
    let game = quadratic(&[1.0; 4], &[0.0; 4], &[0.0; 4]);
    assert_eq!(game.solve_ne().unwrap(), vec![1.0; 4]);
    let game = quadratic(&[1.0, 2.0], &[0.0; 2], &[1.0, -1.0]);
    let p = game.solve_ne().unwrap();
    assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-14);
    assert_abs_diff_eq!(p[1], 2.5, epsilon = 1e-14);
}

#[test]
fn gamma2_bound_closed_form() {
    let game = quadratic(&[1.0; 4], &[2.0; 4], &[0.0; 4]);
    let c = game.estimate_constants().unwrap();
    // G = 2I + 2·(I + 𝟙𝟙ᵀ): eigenvalues 4 (×3) and 12
    assert_abs_diff_eq!(c.strong_mono, 4.0, epsilon = 1e-10);
    assert_abs_diff_eq!(c.lipschitz, 12.0, epsilon = 1e-10);
    let ring = CommGraph::ring(4).unwrap();
    assert_abs_diff_eq!(min_gamma2(&c, &ring).unwrap(), (144.0 / 4.0 + 12.0) / 2.0, epsilon = 1e-9);
}

#[test]
fn generator_converges_exponentially() {
    let game = quadratic(&[2.0, 4.0, -2.0, 1.0], &[2.0; 4], &[0.5, -0.5, 0.2, 0.0]);
    let graph = CommGraph::ring(4).unwrap();
    let c = game.estimate_constants().unwrap();
    let g2 = 1.25 * min_gamma2(&c, &graph).unwrap();
    let run = run_generator(&game, &graph, GeneratorGains::new(1.0, g2).unwrap(), &GeneratorState::zeros(4), 20.0, 1e-3).unwrap();
    assert!(*run.distances.last().unwrap() < 1e-6);
    // log-distance decreases monotonically once the fast consensus modes settle
    let logs: Vec<f64> = run.distances.iter().map(|d| d.ln()).collect();
    let start = (0.1 / 1e-3) as usize;
    assert!(logs[start..].windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn rk4_known_values() {
    let decay = (1, |_t: f64, x: &[f64], dx: &mut [f64]| dx[0] = -x[0]);
    let x = rk4_step(&decay, 0.0, &[1.0], 0.1).unwrap();
    assert_abs_diff_eq!(x[0], 0.9048375, epsilon = 1e-7);
    let rot = (2, |_t: f64, x: &[f64], dx: &mut [f64]| {
        dx[0] = x[1];
        dx[1] = -x[0];
    });
    let steps = 10_000;
    let x = integrate(&rot, 0.0, &[1.0, 0.0], std::f64::consts::FRAC_PI_2 / steps as f64, steps).unwrap();
    assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!(x[1], -1.0, epsilon = 1e-10);
}

#[test]
fn rk4_is_fourth_order() {
    let decay = (1, |_t: f64, x: &[f64], dx: &mut [f64]| dx[0] = -x[0]);
    let err = |steps: usize| (integrate(&decay, 0.0, &[1.0], 1.0 / steps as f64, steps).unwrap()[0] - (-1.0f64).exp()).abs();
    let ratio = err(10) / err(20);
    assert!((ratio - 16.0).abs() <= 0.2 * 16.0, "ratio {ratio}");
}
