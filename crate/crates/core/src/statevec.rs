//! Dense statevector simulation of ansatz circuits.
//!
//! Every generator used here squares to the identity or is diagonal, so gates are
//! applied as amplitude permutations (`e^{−iθP} = cos θ − i sin θ P` for an X-string
//! `P`) or as diagonal phases. Gradients use the reverse (adjoint) sweep over the
//! generator-insertion formula `∂_j J = 2 Im⟨φ|H_p U_{>j} H_j U_{≤j}|φ₀⟩`.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::{Ansatz, Generator, InitialState};
use crate::error::{Error, Result};
use crate::graph::{CutAssignment, Mask, WeightedGraph};

/// Largest qubit count simulated densely.
pub const DENSE_CAP: usize = 20;

/// Default cap on `M` for full Hessians.
pub const HESSIAN_CAP: usize = 1024;

/// Step for differencing the analytic gradient of non-commuting ansätze.
pub const HESSIAN_FD_STEP: f64 = 1e-4;

const DUMP_MAGIC: &[u8; 6] = b"CSVEC\0";

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n: usize, z: Mask) -> Result<Self> {
        check_dense(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        let idx = z as usize;
        if idx >= amps.len() {
            return Err(Error::input(format!("basis index {z:#x} out of range for n={n}")));
        }
        amps[idx] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn plus(n: usize) -> Result<Self> {
        check_dense(n)?;
        let dim = 1usize << n;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self {
            n,
            amps: vec![a; dim],
        })
    }

    pub fn initial(n: usize, init: InitialState) -> Result<Self> {
        match init {
            InitialState::AllZeros => Self::zeros(n),
            InitialState::AllPlus => Self::plus(n),
        }
    }

    /// Wraps raw amplitudes; the length must be a power of two and the norm 1 within 1e−10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::input(format!("amplitude count {dim} is not a power of two")));
        }
        let n = dim.trailing_zeros() as usize;
        check_dense(n)?;
        let s = Self { n, amps };
        if (s.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::input("state is not normalized"));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Writes the binary dump: 16-byte header then interleaved little-endian re/im.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = [0u8; 16];
        header[..6].copy_from_slice(DUMP_MAGIC);
        header[6..8].copy_from_slice(&(self.n as u16).to_le_bytes());
        out.write_all(&header)?;
        for a in &self.amps {
            out.write_all(&a.re.to_le_bytes())?;
            out.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 16];
        input.read_exact(&mut header)?;
        if &header[..6] != DUMP_MAGIC {
            return Err(Error::Parse("bad state dump magic".into()));
        }
        let n = u16::from_le_bytes([header[6], header[7]]) as usize;
        check_dense(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        let mut buf = [0u8; 16];
        for _ in 0..1usize << n {
            input.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            amps.push(Complex64::new(re, im));
        }
        Ok(Self { n, amps })
    }
}

fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        return Err(Error::Cap {
            what: "n_qubits",
            value: n,
            cap: DENSE_CAP,
            reason: "dense statevector needs 2^n amplitudes",
        });
    }
    if n == 0 {
        return Err(Error::input("statevector needs at least one qubit"));
    }
    Ok(())
}

/// Diagonal of `H_p` over the computational basis.
#[derive(Debug, Clone)]
pub struct ProblemHamiltonian {
    n: usize,
    energies: Vec<f64>,
    total_weight: f64,
}

impl ProblemHamiltonian {
    pub fn new(g: &WeightedGraph) -> Result<Self> {
        check_dense(g.n_vertices())?;
        Ok(Self {
            n: g.n_vertices(),
            energies: g.energy_table(),
            total_weight: g.total_weight(),
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }
}

/// `e^{−iθ P}` for an X-string `P`, in place.
fn rotate_x(amps: &mut [Complex64], mask: Mask, theta: f64) {
    let (s, c) = theta.sin_cos();
    let m = mask as usize;
    let mis = Complex64::new(0.0, -s);
    for z in 0..amps.len() {
        let p = z ^ m;
        if z < p {
            let a = amps[z];
            let b = amps[p];
            amps[z] = a * c + b * mis;
            amps[p] = b * c + a * mis;
        }
    }
}

fn rotate_diag(amps: &mut [Complex64], theta: f64, eig: impl Fn(usize) -> f64) {
    for (z, a) in amps.iter_mut().enumerate() {
        *a *= Complex64::from_polar(1.0, -theta * eig(z));
    }
}

#[inline]
fn zstring_eig(z: usize, mask: Mask) -> f64 {
    if (z as Mask & mask).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn zfield_eig(z: usize, n: usize) -> f64 {
    n as f64 - 2.0 * (z.count_ones() as f64)
}

fn apply_gate(
    amps: &mut [Complex64],
    n: usize,
    gen: &Generator,
    theta: f64,
    hp: &ProblemHamiltonian,
) {
    match *gen {
        Generator::XString(m) => rotate_x(amps, m, theta),
        Generator::LocalX(q) => rotate_x(amps, 1 << q, theta),
        Generator::GlobalXMixer => {
            for q in 0..n {
                rotate_x(amps, 1 << q, theta);
            }
        }
        Generator::ZString(m) => {
            let even = Complex64::from_polar(1.0, -theta);
            let odd = even.conj();
            for (z, a) in amps.iter_mut().enumerate() {
                *a *= if (z as Mask & m).count_ones() % 2 == 0 { even } else { odd };
            }
        }
        Generator::GlobalZField => {
            // eigenvalue n − 2·popcount takes only n + 1 values
            let phases: Vec<Complex64> = (0..=n)
                .map(|k| Complex64::from_polar(1.0, -theta * (n as f64 - 2.0 * k as f64)))
                .collect();
            for (z, a) in amps.iter_mut().enumerate() {
                *a *= phases[z.count_ones() as usize];
            }
        }
        Generator::ProblemPhase => rotate_diag(amps, theta, |z| hp.energies[z]),
    }
}

/// `⟨bra| H |ket⟩` for a single generator `H`.
fn generator_matrix_element(
    bra: &[Complex64],
    ket: &[Complex64],
    n: usize,
    gen: &Generator,
    hp: &ProblemHamiltonian,
) -> Complex64 {
    let xsum = |m: usize| -> Complex64 {
        bra.iter()
            .enumerate()
            .map(|(z, b)| b.conj() * ket[z ^ m])
            .sum()
    };
    let dsum = |eig: &dyn Fn(usize) -> f64| -> Complex64 {
        bra.iter()
            .zip(ket)
            .enumerate()
            .map(|(z, (b, k))| b.conj() * k * eig(z))
            .sum()
    };
    match *gen {
        Generator::XString(m) => xsum(m as usize),
        Generator::LocalX(q) => xsum(1 << q),
        Generator::GlobalXMixer => (0..n).map(|q| xsum(1 << q)).sum(),
        Generator::ZString(m) => dsum(&|z| zstring_eig(z, m)),
        Generator::GlobalZField => dsum(&|z| zfield_eig(z, n)),
        Generator::ProblemPhase => dsum(&|z| hp.energies[z]),
    }
}

fn check_compat(ansatz: &Ansatz, theta: &[f64], hp: &ProblemHamiltonian) -> Result<()> {
    if theta.len() != ansatz.n_params() {
        return Err(Error::input(format!(
            "parameter vector has {} entries, ansatz has {}",
            theta.len(),
            ansatz.n_params()
        )));
    }
    if ansatz.n_qubits() != hp.n {
        return Err(Error::input(format!(
            "ansatz acts on {} qubits, graph has {} vertices",
            ansatz.n_qubits(),
            hp.n
        )));
    }
    Ok(())
}

/// `|φ(θ)⟩ = U(θ)|φ₀⟩`, generators applied in list order.
pub fn prepare(ansatz: &Ansatz, theta: &[f64], hp: &ProblemHamiltonian) -> Result<StateVector> {
    check_compat(ansatz, theta, hp)?;
    let n = ansatz.n_qubits();
    let mut psi = StateVector::initial(n, ansatz.initial_state())?;
    for (gen, &t) in ansatz.generators().iter().zip(theta) {
        apply_gate(&mut psi.amps, n, gen, t, hp);
    }
    Ok(psi)
}

/// `J = ⟨ψ|H_p|ψ⟩`.
pub fn objective(hp: &ProblemHamiltonian, psi: &StateVector) -> Result<f64> {
    if psi.n != hp.n {
        return Err(Error::input("state and Hamiltonian dimensions differ"));
    }
    Ok(psi
        .amps
        .iter()
        .zip(&hp.energies)
        .map(|(a, e)| a.norm_sqr() * e)
        .sum())
}

/// `(J − W)/2`, whose minimum over states is `−MaxCut`.
pub fn maxcut_objective(hp: &ProblemHamiltonian, psi: &StateVector) -> Result<f64> {
    Ok((objective(hp, psi)? - hp.total_weight) / 2.0)
}

/// Scratch buffers for the reverse gradient sweep; one per worker thread.
#[derive(Debug, Clone)]
pub struct GradientWorkspace {
    forward: Vec<Complex64>,
    adjoint: Vec<Complex64>,
}

impl GradientWorkspace {
    pub fn new(n: usize) -> Self {
        let dim = 1usize << n;
        Self {
            forward: vec![Complex64::new(0.0, 0.0); dim],
            adjoint: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    fn ensure(&mut self, n: usize) {
        let dim = 1usize << n;
        if self.forward.len() != dim {
            *self = Self::new(n);
        }
    }
}

/// Objective and full gradient in one forward and one reverse sweep.
pub fn value_and_gradient(
    hp: &ProblemHamiltonian,
    ansatz: &Ansatz,
    theta: &[f64],
    ws: &mut GradientWorkspace,
) -> Result<(f64, Vec<f64>)> {
    check_compat(ansatz, theta, hp)?;
    let n = ansatz.n_qubits();
    ws.ensure(n);
    let init = StateVector::initial(n, ansatz.initial_state())?;
    ws.forward.copy_from_slice(&init.amps);
    for (gen, &t) in ansatz.generators().iter().zip(theta) {
        apply_gate(&mut ws.forward, n, gen, t, hp);
    }
    let mut value = 0.0;
    for ((lam, psi), e) in ws.adjoint.iter_mut().zip(&ws.forward).zip(&hp.energies) {
        *lam = psi * e;
        value += psi.norm_sqr() * e;
    }
    let mut grad = vec![0.0; theta.len()];
    for j in (0..theta.len()).rev() {
        let gen = &ansatz.generators()[j];
        grad[j] = 2.0 * generator_matrix_element(&ws.adjoint, &ws.forward, n, gen, hp).im;
        apply_gate(&mut ws.forward, n, gen, -theta[j], hp);
        apply_gate(&mut ws.adjoint, n, gen, -theta[j], hp);
    }
    Ok((value, grad))
}

pub fn gradient(g: &WeightedGraph, ansatz: &Ansatz, theta: &[f64]) -> Result<Vec<f64>> {
    let hp = ProblemHamiltonian::new(g)?;
    let mut ws = GradientWorkspace::new(ansatz.n_qubits().min(DENSE_CAP));
    Ok(value_and_gradient(&hp, ansatz, theta, &mut ws)?.1)
}

/// Full `M×M` Hessian of `J`.
///
/// 𝕏-ansätze use the double-commutator expectation
/// `−⟨[[H_p,H_j],H_k]⟩ = −2 Re⟨H_pφ|X^{S_j⊕S_k}φ⟩ + 2 Re⟨X^{S_j}φ|H_p|X^{S_k}φ⟩`;
/// other families central-difference the analytic gradient.
pub fn hessian(hp: &ProblemHamiltonian, ansatz: &Ansatz, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    hessian_capped(hp, ansatz, theta, HESSIAN_CAP)
}

pub fn hessian_capped(
    hp: &ProblemHamiltonian,
    ansatz: &Ansatz,
    theta: &[f64],
    cap: usize,
) -> Result<Vec<Vec<f64>>> {
    check_compat(ansatz, theta, hp)?;
    let m = ansatz.n_params();
    if m > cap {
        return Err(Error::Cap {
            what: "n_params",
            value: m,
            cap,
            reason: "the Hessian has M^2 entries",
        });
    }
    if ansatz.is_x_ansatz() {
        let masks = ansatz.x_masks()?;
        let phi = prepare(ansatz, theta, hp)?;
        let phi = &phi.amps;
        let e = &hp.energies;
        let chi: Vec<Complex64> = phi.iter().zip(e).map(|(a, e)| a * e).collect();
        let mut h = vec![vec![0.0; m]; m];
        for j in 0..m {
            let mj = masks[j] as usize;
            for k in j..m {
                let mk = masks[k] as usize;
                let mjk = mj ^ mk;
                let mut first = 0.0;
                let mut second = 0.0;
                for z in 0..phi.len() {
                    first += (chi[z].conj() * phi[z ^ mjk]).re;
                    second += (phi[z ^ mj].conj() * phi[z ^ mk]).re * e[z];
                }
                let v = -2.0 * first + 2.0 * second;
                h[j][k] = v;
                h[k][j] = v;
            }
        }
        Ok(h)
    } else {
        let mut ws = GradientWorkspace::new(ansatz.n_qubits());
        let mut cols = Vec::with_capacity(m);
        let mut t = theta.to_vec();
        for j in 0..m {
            t[j] = theta[j] + HESSIAN_FD_STEP;
            let (_, gp) = value_and_gradient(hp, ansatz, &t, &mut ws)?;
            t[j] = theta[j] - HESSIAN_FD_STEP;
            let (_, gm) = value_and_gradient(hp, ansatz, &t, &mut ws)?;
            t[j] = theta[j];
            cols.push(
                gp.iter()
                    .zip(&gm)
                    .map(|(a, b)| (a - b) / (2.0 * HESSIAN_FD_STEP))
                    .collect::<Vec<_>>(),
            );
        }
        let mut h = vec![vec![0.0; m]; m];
        for j in 0..m {
            for k in 0..m {
                h[j][k] = 0.5 * (cols[j][k] + cols[k][j]);
            }
        }
        Ok(h)
    }
}

/// Draws a basis state with probability `|ψ_z|²`.
pub fn sample_cut(psi: &StateVector, seed: u64) -> CutAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_cut_with(psi, &mut rng)
}

pub fn sample_cut_with<R: Rng>(psi: &StateVector, rng: &mut R) -> CutAssignment {
    let u: f64 = rng.gen::<f64>() * psi.norm_sqr();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (z, a) in psi.amps.iter().enumerate() {
        let p = a.norm_sqr();
        if p > 0.0 {
            last_nonzero = z;
        }
        acc += p;
        if u < acc {
            return CutAssignment::new(z as Mask, psi.n).expect("index fits");
        }
    }
    CutAssignment::new(last_nonzero as Mask, psi.n).expect("index fits")
}

/// Best cut among basis states carrying probability above 1e−12; ties go to the lowest index.
pub fn best_basis_cut(g: &WeightedGraph, psi: &StateVector) -> Result<CutAssignment> {
    if g.n_vertices() != psi.n {
        return Err(Error::input("state and graph dimensions differ"));
    }
    let mut best: Option<(f64, usize)> = None;
    for (z, a) in psi.amps.iter().enumerate() {
        if a.norm_sqr() <= 1e-12 {
            continue;
        }
        let v = g.cut_value_mask(z as Mask);
        if best.map_or(true, |(bv, _)| v > bv) {
            best = Some((v, z));
        }
    }
    let (_, z) = best.ok_or_else(|| Error::input("state has no support above 1e-12"))?;
    CutAssignment::new(z as Mask, psi.n)
}
