use nashtrack::controller::{control_law, transform, transformed_feedback};
use nashtrack::game::GameSpec;
use nashtrack::generator::{generator_rhs, generator_rhs_stacked, GeneratorGains, GeneratorState};
use nashtrack::graph::CommGraph;
use nashtrack::internal_model::{companion_from_coeffs, default_stabilizer, im_rhs, solve_sylvester, ImLevel, StabilizerPreset};
use nashtrack::numerics::{symmetric_eigenvalues, Matrix};
use proptest::prelude::*;

fn levels_for(freqs: &[f64]) -> ImLevel {
    // ∏ λ(λ² + ω²) expanded to ς form
    let mut poly = vec![0.0, 1.0];
    for w in freqs {
        let mut next = vec![0.0; poly.len() + 2];
        for (k, c) in poly.iter().enumerate() {
            next[k] += w * w * c;
            next[k + 2] += c;
        }
        poly = next;
    }
    let n = poly.len() - 1;
    let coeffs: Vec<f64> = poly[..n].iter().map(|c| -c).collect();
    let comp = companion_from_coeffs(&coeffs).unwrap();
    solve_sylvester(&comp, &default_stabilizer(n, StabilizerPreset::Factorial)).unwrap()
}

fn bench_levels() -> Vec<ImLevel> {
    [vec![0.0, -1.0, 0.0], vec![0.0, -4.0, 0.0, -5.0, 0.0]]
        .iter()
        .map(|c| {
            let comp = companion_from_coeffs(c).unwrap();
            solve_sylvester(&comp, &default_stabilizer(comp.dim(), StabilizerPreset::Benchmark)).unwrap()
        })
        .collect()
}

fn weighted_graph(n: usize, weights: &[f64]) -> CommGraph {
    // ring backbone keeps it connected; chords get the sampled weights
    let mut edges: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    let mut k = 0;
    for i in 0..n {
        for j in (i + 2)..n {
            if (i, j) != (0, n - 1) {
                edges.push((i, j, weights[k % weights.len()]));
                k += 1;
            }
        }
    }
    CommGraph::from_edges(n, &edges).unwrap()
}

proptest! {
    #[test]
    fn laplacian_rows_sum_to_zero_and_psd(n in 3usize..7, weights in prop::collection::vec(0.0f64..3.0, 1..12)) {
        let g = weighted_graph(n, &weights);
        let l = g.laplacian();
        for i in 0..n {
            let s: f64 = l.row(i).iter().sum();
            prop_assert!(s.abs() <= 1e-12 * (1.0 + l[(i, i)]));
        }
        prop_assert!(l.asymmetry() == 0.0);
        let eig = symmetric_eigenvalues(&l).unwrap();
        prop_assert!(eig[0].abs() < 1e-9);
        prop_assert!(eig[1] > 1e-9);
    }

    #[test]
    fn generator_forms_agree(
        h1 in prop::collection::vec(-3.0f64..3.0, 4),
        h2 in prop::collection::vec(0.0f64..0.5, 4),
        p in prop::collection::vec(-5.0f64..5.0, 16),
        g1 in 0.1f64..5.0,
        g2 in 0.1f64..50.0,
    ) {
        let game = GameSpec::quadratic(h1, h2, vec![0.0; 4]).unwrap();
        let graph = CommGraph::ring(4).unwrap();
        let state = GeneratorState { estimates: Matrix::from_vec(4, 4, p).unwrap() };
        let gains = GeneratorGains::new(g1, g2).unwrap();
        let a = generator_rhs(&game, &graph, gains, &state);
        let b = generator_rhs_stacked(&game, &graph, gains, &state);
        prop_assert!((&a - &b).max_abs() <= 1e-12 * (1.0 + a.max_abs()));
    }

    #[test]
    fn equilibrium_consensus_is_stationary(
        h1 in prop::collection::vec(-3.0f64..3.0, 4),
        h2 in prop::collection::vec(0.0f64..1.0, 4),
        h3 in prop::collection::vec(-1.0f64..1.0, 4),
        g2 in 0.1f64..50.0,
    ) {
        let game = GameSpec::quadratic(h1, h2, h3).unwrap();
        let graph = CommGraph::ring(4).unwrap();
        let p = game.solve_ne().unwrap();
        let rhs = generator_rhs(&game, &graph, GeneratorGains::new(1.0, g2).unwrap(), &GeneratorState::consensus(&p));
        prop_assert!(rhs.max_abs() <= 1e-9);
    }

    #[test]
    fn sylvester_solution_holds_for_random_spectra(freqs in prop::collection::vec(0.2f64..3.0, 1..3)) {
        let mut f = freqs.clone();
        f.sort_by(f64::total_cmp);
        prop_assume!(f.windows(2).all(|w| w[1] - w[0] > 0.05));
        let level = levels_for(&f);
        let ng = &Matrix::column(&level.stabilizer.n) * &level.companion.gamma;
        prop_assert!(level.residual <= 1e-10 * (1.0 + ng.frobenius_norm()) * 10f64.powi(level.dim() as i32));
        let pt: Vec<f64> = (0..level.dim()).map(|j| (0..level.dim()).map(|i| level.psi[i] * level.t[(i, j)]).sum()).collect();
        for (a, b) in pt.iter().zip(level.companion.gamma.row(0)) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn internal_model_rhs_is_affine(eta in prop::collection::vec(-3.0f64..3.0, 3), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let level = &bench_levels()[0];
        let sum = im_rhs(level, &eta, a + b);
        let base = im_rhs(level, &eta, a);
        for k in 0..3 {
            prop_assert!((sum[k] - base[k] - level.stabilizer.n[k] * b).abs() <= 1e-12 * (1.0 + sum[k].abs()));
        }
    }

    #[test]
    fn control_law_matches_recursion(
        k in prop::collection::vec(0.1f64..20.0, 2),
        x in prop::collection::vec(-5.0f64..5.0, 2),
        eta in prop::collection::vec(-2.0f64..2.0, 8),
        p in -3.0f64..3.0,
    ) {
        let levels = bench_levels();
        let u = control_law(&k, &levels, &x, &eta, p, false);
        let theta = vec![vec![0.0; 3], vec![0.0; 5]];
        let ts = transform(&levels, &[0.0], &x, &eta, u, &[0.0], &theta, p);
        prop_assert!((ts.x_bar[2] - transformed_feedback(&k, &ts.x_bar[..2])).abs() <= 1e-12 * (1.0 + u.abs()));
    }

    #[test]
    fn control_law_is_affine(
        x1 in prop::collection::vec(-5.0f64..5.0, 2),
        x2 in prop::collection::vec(-5.0f64..5.0, 2),
        e1 in prop::collection::vec(-2.0f64..2.0, 8),
        e2 in prop::collection::vec(-2.0f64..2.0, 8),
        p1 in -3.0f64..3.0,
        p2 in -3.0f64..3.0,
    ) {
        let levels = bench_levels();
        let k = [3.0, 5.0];
        let u = |x: &[f64], e: &[f64], p: f64| control_law(&k, &levels, x, e, p, false);
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
        let zero = u(&[0.0, 0.0], &[0.0; 8], 0.0);
        let lhs = u(&add(&x1, &x2), &add(&e1, &e2), p1 + p2);
        let rhs = u(&x1, &e1, p1) + u(&x2, &e2, p2) - zero;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn eta_shift_moves_transformed_state(delta in -3.0f64..3.0, idx in 0usize..8) {
        let levels = bench_levels();
        let eta = vec![0.1; 8];
        let theta = vec![vec![0.0; 3], vec![0.0; 5]];
        let x = [0.4, -0.2];
        let a = transform(&levels, &[0.0], &x, &eta, 1.0, &[0.0], &theta, 0.3);
        let mut shifted = eta.clone();
        shifted[idx] += delta;
        let b = transform(&levels, &[0.0], &x, &shifted, 1.0, &[0.0], &theta, 0.3);
        let (s, j) = if idx < 3 { (0, idx) } else { (1, idx - 3) };
        prop_assert!((b.eta_tilde[s][j] - a.eta_tilde[s][j] - delta).abs() <= 1e-12);
    }
}
