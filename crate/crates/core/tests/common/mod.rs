//! Shared oracles and random instance builders for the integration tests.

#![allow(dead_code)]

use cutscape::ansatz::{Ansatz, Generator, InitialState};
use cutscape::graph::{generate, GraphGenerator, GraphKind, Mask, WeightedGraph};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

/// Tensor product with qubit `q` on basis-index bit `q`.
pub fn kron_string(n: usize, op_on: impl Fn(usize) -> Option<CMat>) -> CMat {
    let mut out = CMat::identity(1, 1);
    for q in (0..n).rev() {
        let f = op_on(q).unwrap_or_else(|| CMat::identity(2, 2));
        out = out.kronecker(&f);
    }
    out
}

pub fn x_string(n: usize, m: Mask) -> CMat {
    kron_string(n, |q| ((m >> q) & 1 == 1).then(pauli_x))
}

pub fn z_string(n: usize, m: Mask) -> CMat {
    kron_string(n, |q| ((m >> q) & 1 == 1).then(pauli_z))
}

/// `Σ w Z_a Z_b` assembled from Kronecker products.
pub fn problem_matrix(g: &WeightedGraph) -> CMat {
    let n = g.n_vertices();
    let dim = 1 << n;
    let mut h = CMat::zeros(dim, dim);
    for e in g.edges() {
        h += z_string(n, e.mask()) * c(e.w);
    }
    h
}

pub fn generator_matrix(n: usize, gen: &Generator, hp: &CMat) -> CMat {
    let dim = 1 << n;
    match *gen {
        Generator::XString(m) => x_string(n, m),
        Generator::ZString(m) => z_string(n, m),
        Generator::LocalX(q) => x_string(n, 1 << q),
        Generator::GlobalXMixer => (0..n).fold(CMat::zeros(dim, dim), |acc, q| acc + x_string(n, 1 << q)),
        Generator::GlobalZField => (0..n).fold(CMat::zeros(dim, dim), |acc, q| acc + z_string(n, 1 << q)),
        Generator::ProblemPhase => hp.clone(),
    }
}

/// `Π_j exp(−iθ_j H_j) |init⟩` with generic dense matrix exponentials.
pub fn dense_state(g: &WeightedGraph, ansatz: &Ansatz, theta: &[f64]) -> Vec<Complex64> {
    let n = ansatz.n_qubits();
    let dim = 1 << n;
    let hp = problem_matrix(g);
    let mut psi = match ansatz.initial_state() {
        InitialState::AllZeros => {
            let mut v = vec![c(0.0); dim];
            v[0] = c(1.0);
            v
        }
        InitialState::AllPlus => vec![c((dim as f64).sqrt().recip()); dim],
    };
    for (gen, &t) in ansatz.generators().iter().zip(theta) {
        let h = generator_matrix(n, gen, &hp);
        let u = (h * Complex64::new(0.0, -t)).exp();
        let v = nalgebra::DVector::from_vec(psi);
        psi = (u * v).data.as_vec().clone();
    }
    psi
}

pub fn dense_objective(g: &WeightedGraph, ansatz: &Ansatz, theta: &[f64]) -> f64 {
    let psi = nalgebra::DVector::from_vec(dense_state(g, ansatz, theta));
    let hp = problem_matrix(g);
    (psi.adjoint() * hp * &psi)[(0, 0)].re
}

/// Cut energy `Σ w (−1)^{cut}` summed in edge order.
pub fn energy_oracle(g: &WeightedGraph, s: Mask) -> f64 {
    let mut e = 0.0;
    for edge in g.edges() {
        let cut = ((s >> edge.a) ^ (s >> edge.b)) & 1 == 1;
        e += if cut { -edge.w } else { edge.w };
    }
    e
}

pub fn naive_max_cut(g: &WeightedGraph) -> f64 {
    let n = g.n_vertices();
    (0..1u64 << n)
        .map(|s| {
            g.edges()
                .iter()
                .filter(|e| ((s >> e.a) & 1) != ((s >> e.b) & 1))
                .map(|e| e.w)
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

pub fn random_complete(n: usize, seed: u64) -> WeightedGraph {
    generate(&GraphGenerator::new(GraphKind::Complete, n, seed)).unwrap()
}

/// Random simple graph with edge probability `p` and uniform weights in [0, 5].
pub fn random_graph<R: Rng>(n: usize, p: f64, r: &mut R) -> WeightedGraph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if r.gen_bool(p) {
                edges.push((a, b, r.gen_range(0.0..=5.0)));
            }
        }
    }
    WeightedGraph::new(n, edges).unwrap()
}

/// Random 𝕏-ansatz: `count` nonempty masks of popcount at most `depth`, repeats allowed.
pub fn random_x_ansatz<R: Rng>(n: usize, depth: usize, count: usize, r: &mut R) -> Ansatz {
    let full: Mask = (1 << n) - 1;
    let masks: Vec<Mask> = (0..count)
        .map(|_| loop {
            let m = r.gen::<u64>() & full;
            if m != 0 && m.count_ones() as usize <= depth {
                break m;
            }
        })
        .collect();
    Ansatz::from_masks(n, masks).unwrap()
}

pub fn random_theta<R: Rng>(m: usize, r: &mut R) -> Vec<f64> {
    (0..m).map(|_| r.gen_range(0.0..std::f64::consts::TAU)).collect()
}

/// Central differences of a scalar function.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            t[k] = theta[k] + h;
            let plus = f(&t);
            t[k] = theta[k] - h;
            let minus = f(&t);
            t[k] = theta[k];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}
