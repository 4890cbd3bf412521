mod common;

use common::*;
use cutscape::ansatz::{Ansatz, QaoaVariant, XzVariant};
use cutscape::barren;
use cutscape::flipsearch::{self, FlipPolicy, PolicyKind};
use cutscape::graph::{max_cut_bruteforce, CutAssignment, Mask, WeightedGraph};
use cutscape::landscape::{self, Classification, ProbeLabel, ProbeTolerances};
use cutscape::statevec::{self, GradientWorkspace, ProblemHamiltonian};
use cutscape::trigform::TrigDecomposition;
use rand::Rng;

#[test]
fn statevector_matches_dense_exponentials() {
    let mut r = rng(1);
    let g = random_complete(4, 3);
    let hp = ProblemHamiltonian::new(&g).unwrap();
    let ansatze = [
        Ansatz::x_depth(4, 2).unwrap(),
        Ansatz::xz(4, 2, XzVariant::KBodyZ).unwrap(),
        Ansatz::xz(4, 1, XzVariant::GlobalZ).unwrap(),
        Ansatz::qaoa(4, 2, QaoaVariant::Standard).unwrap(),
        Ansatz::qaoa(4, 2, QaoaVariant::LocalX).unwrap(),
        Ansatz::qaoa(4, 1, QaoaVariant::LocalXZeroStart).unwrap(),
    ];
    for a in &ansatze {
        let theta = random_theta(a.n_params(), &mut r);
        let psi = statevec::prepare(a, &theta, &hp).unwrap();
        let oracle = dense_state(&g, a, &theta);
        for (x, y) in psi.amplitudes().iter().zip(&oracle) {
            assert!((x - y).norm() < 1e-10, "{a:?}");
        }
        let j = statevec::objective(&hp, &psi).unwrap();
        assert!((j - dense_objective(&g, a, &theta)).abs() < 1e-9);
    }
}

#[test]
fn energy_table_is_diagonal_of_kronecker_hamiltonian() {
    let g = random_complete(4, 8);
    let h = problem_matrix(&g);
    for (z, e) in g.energy_table().iter().enumerate() {
        assert!((h[(z, z)].re - e).abs() < 1e-12);
        assert_eq!(*e, energy_oracle(&g, z as Mask));
    }
}

#[test]
fn brute_force_matches_naive_enumeration() {
    let mut r = rng(2);
    for _ in 0..30 {
        let n = r.gen_range(2..=10);
        let g = random_graph(n, 0.6, &mut r);
        let mc = max_cut_bruteforce(&g).unwrap();
        assert!((mc.value - naive_max_cut(&g)).abs() < 1e-9);
        assert_eq!(g.cut_value(&mc.argmax).unwrap(), mc.value);
        assert!(!mc.argmax.contains(0));
    }
}

#[test]
fn closed_form_matches_statevector() {
    let mut r = rng(3);
    for _ in 0..60 {
        let n = r.gen_range(2..=7);
        let g = random_graph(n, 0.7, &mut r);
        let count = r.gen_range(1..=12);
        let depth = r.gen_range(1..=n);
        let a = random_x_ansatz(n, depth, count, &mut r);
        let theta = random_theta(a.n_params(), &mut r);
        let dec = TrigDecomposition::new(&g, &a).unwrap();
        let hp = ProblemHamiltonian::new(&g).unwrap();
        let psi = statevec::prepare(&a, &theta, &hp).unwrap();
        let j_sv = statevec::objective(&hp, &psi).unwrap();
        assert!((dec.objective(&theta).unwrap() - j_sv).abs() < 1e-9);
        let g_sv = statevec::gradient(&g, &a, &theta).unwrap();
        for (x, y) in dec.gradient(&theta).unwrap().iter().zip(&g_sv) {
            assert!((x - y).abs() < 1e-9);
        }
        let h = statevec::hessian(&hp, &a, &theta).unwrap();
        for (k, d) in dec.hessian_diagonal(&theta).unwrap().iter().enumerate() {
            assert!((d - h[k][k]).abs() < 1e-8);
        }
    }
}

#[test]
fn st_decomposition_reconstructs_objective_along_one_coordinate() {
    let mut r = rng(4);
    let g = random_complete(5, 4);
    let a = random_x_ansatz(5, 3, 8, &mut r);
    let dec = TrigDecomposition::new(&g, &a).unwrap();
    let theta = random_theta(a.n_params(), &mut r);
    for k in 0..a.n_params() {
        let st = dec.st_coefficients(&theta, k).unwrap();
        let mut t = theta.clone();
        t[k] = 0.0;
        let at0 = dec.objective(&t).unwrap();
        t[k] = std::f64::consts::FRAC_PI_4;
        let at45 = dec.objective(&t).unwrap();
        // J(θ_k) = cos S + sin T + V
        assert!(((at0 - at45) - (st.s_k - st.t_k)).abs() < 1e-9);
    }
}

#[test]
fn gradients_match_finite_differences_for_all_families() {
    let mut r = rng(5);
    let g = random_complete(5, 9);
    let hp = ProblemHamiltonian::new(&g).unwrap();
    let mut ws = GradientWorkspace::new(5);
    for a in [
        Ansatz::x_depth(5, 3).unwrap(),
        Ansatz::xz(5, 2, XzVariant::KBodyZ).unwrap(),
        Ansatz::xz(5, 2, XzVariant::GlobalZ).unwrap(),
        Ansatz::qaoa(5, 3, QaoaVariant::Standard).unwrap(),
        Ansatz::qaoa(5, 2, QaoaVariant::LocalXZeroStart).unwrap(),
    ] {
        let theta = random_theta(a.n_params(), &mut r);
        let (_, grad) = statevec::value_and_gradient(&hp, &a, &theta, &mut ws).unwrap();
        let f = |t: &[f64]| statevec::objective(&hp, &statevec::prepare(&a, t, &hp).unwrap()).unwrap();
        for (x, y) in grad.iter().zip(fd_gradient(f, &theta, 1e-5)) {
            assert!((x - y).abs() <= 1e-5 * y.abs().max(1.0), "{x} vs {y}");
        }
    }
}

#[test]
fn hessian_matches_finite_differences_of_gradient() {
    let mut r = rng(6);
    let g = random_complete(4, 2);
    let hp = ProblemHamiltonian::new(&g).unwrap();
    for a in [
        Ansatz::x_depth(4, 2).unwrap(),
        Ansatz::xz(4, 1, XzVariant::KBodyZ).unwrap(),
    ] {
        let theta = random_theta(a.n_params(), &mut r);
        let h = statevec::hessian(&hp, &a, &theta).unwrap();
        let h_step = 1e-5;
        for k in 0..a.n_params() {
            let mut t = theta.clone();
            t[k] += h_step;
            let gp = statevec::gradient(&g, &a, &t).unwrap();
            t[k] -= 2.0 * h_step;
            let gm = statevec::gradient(&g, &a, &t).unwrap();
            for j in 0..a.n_params() {
                let fd = (gp[j] - gm[j]) / (2.0 * h_step);
                assert!((h[j][k] - fd).abs() < 1e-5 * fd.abs().max(1.0));
            }
        }
    }
}

#[test]
fn eigenstate_parameters_prepare_the_cut() {
    let mut r = rng(7);
    for _ in 0..20 {
        let n = r.gen_range(3..=6);
        let g = random_graph(n, 0.8, &mut r);
        let a = random_x_ansatz(n, n, r.gen_range(1..=8), &mut r);
        let hp = ProblemHamiltonian::new(&g).unwrap();
        let masks = a.x_masks().unwrap();
        for z in 0..1u64 << n {
            let reachable = masks.iter().any(|_| true) && span_contains(&masks, z);
            match landscape::eigenstate_parameters(&a, z).unwrap() {
                Some(theta) => {
                    assert!(reachable);
                    let psi = statevec::prepare(&a, &theta, &hp).unwrap();
                    assert!(psi.amplitudes()[z as usize].norm_sqr() > 1.0 - 1e-12);
                }
                None => assert!(!reachable),
            }
        }
    }
}

fn span_contains(masks: &[Mask], z: Mask) -> bool {
    let m = masks.len();
    (0..1u64 << m).any(|sel| {
        (0..m).filter(|j| (sel >> j) & 1 == 1).fold(0, |acc, j| acc ^ masks[j]) == z
    })
}

#[test]
fn eigenstate_hessian_diagonal_matches_statevector() {
    let mut r = rng(8);
    for _ in 0..20 {
        let n = r.gen_range(3..=6);
        let g = random_graph(n, 0.8, &mut r);
        let a = random_x_ansatz(n, n, r.gen_range(1..=8), &mut r);
        let hp = ProblemHamiltonian::new(&g).unwrap();
        let z = r.gen::<u64>() & g.full_mask();
        let Some(theta) = landscape::eigenstate_parameters(&a, z).unwrap() else {
            continue;
        };
        let diag = landscape::hessian_diag_at_eigenstate(&g, &a, &CutAssignment::new(z, n).unwrap())
            .unwrap();
        let h = statevec::hessian(&hp, &a, &theta).unwrap();
        for (k, d) in diag.iter().enumerate() {
            assert!((d - h[k][k]).abs() < 1e-8);
        }
        // gradient vanishes at every eigenstate configuration
        assert!(statevec::gradient(&g, &a, &theta).unwrap().iter().all(|x| x.abs() < 1e-9));
    }
}

#[test]
fn flip_fixed_points_are_exactly_local_minima_or_global_minima() {
    let mut r = rng(9);
    for _ in 0..40 {
        let n = r.gen_range(3..=7);
        let g = random_graph(n, 0.7, &mut r);
        let a = random_x_ansatz(n, n, r.gen_range(1..=6), &mut r);
        let masks = a.x_masks().unwrap();
        let fixed = flipsearch::fixed_point_set(&g, &masks).unwrap();
        for rep in landscape::eigenstate_reports(&g, &a).unwrap() {
            let min_side = matches!(
                rep.classification,
                Classification::LocalMin | Classification::GlobalMin
            ) || rep.hessian_diag.iter().all(|&d| d >= 0.0);
            assert_eq!(fixed.contains(&rep.cut), min_side, "{rep:?}");
        }
    }
}

#[test]
fn flip_policies_end_in_fixed_points() {
    let mut r = rng(10);
    for _ in 0..20 {
        let n = r.gen_range(3..=8);
        let g = random_graph(n, 0.7, &mut r);
        let a = random_x_ansatz(n, 3.min(n), r.gen_range(2..=10), &mut r);
        let masks = a.x_masks().unwrap();
        let fixed = flipsearch::fixed_point_set(&g, &masks).unwrap();
        for kind in [PolicyKind::UniformRandom, PolicyKind::FirstImprovement, PolicyKind::Greedy] {
            let start = CutAssignment::new(r.gen::<u64>() & g.full_mask(), n).unwrap();
            let out = flipsearch::flip_search(&g, &masks, start, FlipPolicy::new(kind, 3)).unwrap();
            assert!(out.converged);
            assert!(fixed.contains(&out.final_cut.canonical()));
        }
    }
}

#[test]
fn cut_value_is_monotone_along_parameters_of_classical_flips() {
    // the classical ansatz critical points at θ ∈ {0, π/2}^n reproduce every cut energy
    let g = random_complete(5, 12);
    let a = Ansatz::classical(5).unwrap();
    let hp = ProblemHamiltonian::new(&g).unwrap();
    for z in 0..32u64 {
        let theta: Vec<f64> = (0..5)
            .map(|q| if (z >> q) & 1 == 1 { std::f64::consts::FRAC_PI_2 } else { 0.0 })
            .collect();
        let j = statevec::objective(&hp, &statevec::prepare(&a, &theta, &hp).unwrap()).unwrap();
        assert!((j - energy_oracle(&g, z)).abs() < 1e-12);
    }
}

#[test]
fn variance_matches_sampled_adjoint_gradients() {
    // independent of the closed-form gradient: sample the statevector adjoint gradient
    let mut r = rng(11);
    let g = WeightedGraph::new(4, [(0, 1, 1.0), (0, 2, 2.0), (1, 3, 0.5), (2, 3, 1.5)]).unwrap();
    let a = Ansatz::from_masks(4, [0b0001, 0b0011, 0b0110, 0b1000]).unwrap();
    let hp = ProblemHamiltonian::new(&g).unwrap();
    let mut ws = GradientWorkspace::new(4);
    for k in 0..4 {
        let exact = barren::variance_closed_form(&g, &a, k).unwrap().closed_form;
        let samples = 40_000;
        let mut xs = Vec::with_capacity(samples);
        for _ in 0..samples {
            let theta = random_theta(4, &mut r);
            xs.push(statevec::value_and_gradient(&hp, &a, &theta, &mut ws).unwrap().1[k]);
        }
        let mean = xs.iter().sum::<f64>() / samples as f64;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / samples as f64;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / samples as f64;
        let se = ((m4 - m2 * m2) / samples as f64).sqrt();
        assert!((m2 - exact).abs() < 4.0 * se, "k={k}: {m2} vs {exact} ± {se}");
    }
}

#[test]
fn probe_labels_eigenstate_and_non_critical_points() {
    let g = random_complete(4, 5);
    let a = Ansatz::x_depth(4, 2).unwrap();
    let theta = landscape::eigenstate_parameters(&a, 0b0110).unwrap().unwrap();
    let res = landscape::probe_critical_point(&g, &a, &theta, ProbeTolerances::default()).unwrap();
    assert_eq!(res.label, ProbeLabel::EigenstateConfig);
    let mut r = rng(12);
    let theta = random_theta(a.n_params(), &mut r);
    assert!(landscape::probe_critical_point(&g, &a, &theta, ProbeTolerances::default()).is_err());
}
