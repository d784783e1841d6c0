//! Dense unitary simulator.
//!
//! Qubit 0 is the most significant bit of a basis index.  Rotations follow
//! `R_a(theta) = exp(-i theta sigma_a / 2)`; `XX(theta) = exp(-i theta X X)`.
//!
//! Ising-type gates are diagonal after a Hadamard on every qubit, so the
//! simulator keeps the accumulated unitary either in the computational frame
//! or in that Hadamard frame and switches lazily.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{apply_flip, couplings_from_weights, CouplingMatrix};
use crate::error::{Error, Result};
use crate::synth::DriveSchedule;
use crate::trap::ModeData;

pub type Unitary = DMatrix<Complex64>;

/// Largest register simulated densely.
pub const MAX_QUBITS: usize = 13;

type Mat2 = [[Complex64; 2]; 2];

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    H { qubit: usize },
    Xx { a: usize, b: usize, angle: f64 },
    Ising { couplings: Vec<f64> },
    Schedule {
        schedule: DriveSchedule,
        #[serde(skip)]
        modes: Arc<ModeData>,
    },
}

impl Gate {
    pub fn ising(j: &CouplingMatrix) -> Self {
        Self::Ising {
            couplings: j.vectorize(),
        }
    }

    pub fn schedule(schedule: DriveSchedule, modes: Arc<ModeData>) -> Self {
        Self::Schedule { schedule, modes }
    }

    fn check(&self, n: usize) -> Result<()> {
        let q = |i: usize| {
            if i < n {
                Ok(())
            } else {
                Err(Error::IndexOutOfRange { index: i, n })
            }
        };
        match self {
            Self::Rx { qubit, .. } | Self::Ry { qubit, .. } | Self::Rz { qubit, .. } | Self::H { qubit } => q(*qubit),
            Self::Xx { a, b, .. } => {
                q(*a)?;
                q(*b)?;
                if a == b {
                    return Err(Error::InvalidParameter(format!("XX gate on a single qubit {a}")));
                }
                Ok(())
            }
            Self::Ising { couplings } => {
                let expected = crate::coupling::pair_count(n);
                if couplings.len() != expected {
                    return Err(Error::DimensionMismatch {
                        expected,
                        actual: couplings.len(),
                    });
                }
                Ok(())
            }
            Self::Schedule { schedule, modes } => {
                if modes.n() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: modes.n(),
                    });
                }
                schedule.check(modes)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Circuit {
    pub n: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Self { n, gates: Vec::new() }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn extend(&mut self, other: &Circuit) -> &mut Self {
        self.gates.extend(other.gates.iter().cloned());
        self
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        Err(Error::TooManyQubits { n, limit: MAX_QUBITS })
    } else {
        Ok(())
    }
}

fn rx(t: f64) -> Mat2 {
    let (s, co) = (t / 2.0).sin_cos();
    [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
}

fn ry(t: f64) -> Mat2 {
    let (s, co) = (t / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

fn rz(t: f64) -> Mat2 {
    let (s, co) = (t / 2.0).sin_cos();
    [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]]
}

fn hadamard() -> Mat2 {
    let h = c(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// Accumulates a circuit unitary by left-multiplying gates.
pub struct Simulator {
    n: usize,
    u: Unitary,
    /// When set, `u` holds `H^n * U`.
    hadamard_frame: bool,
}

impl Simulator {
    pub fn new(n: usize) -> Result<Self> {
        check_size(n)?;
        let dim = 1usize << n;
        Ok(Self {
            n,
            u: Unitary::identity(dim, dim),
            hadamard_frame: false,
        })
    }

    fn dim(&self) -> usize {
        1 << self.n
    }

    fn apply_1q(&mut self, q: usize, g: Mat2) {
        let dim = self.dim();
        let stride = 1usize << (self.n - 1 - q);
        self.u.as_mut_slice().par_chunks_mut(dim).for_each(|col| {
            for base in (0..dim).step_by(2 * stride) {
                for i in base..base + stride {
                    let a = col[i];
                    let b = col[i + stride];
                    col[i] = g[0][0] * a + g[0][1] * b;
                    col[i + stride] = g[1][0] * a + g[1][1] * b;
                }
            }
        });
    }

    /// Normalized Walsh-Hadamard transform of every column.
    fn toggle_frame(&mut self) {
        let dim = self.dim();
        let norm = (dim as f64).sqrt().recip();
        self.u.as_mut_slice().par_chunks_mut(dim).for_each(|col| {
            let mut h = 1;
            while h < dim {
                for base in (0..dim).step_by(2 * h) {
                    for i in base..base + h {
                        let a = col[i];
                        let b = col[i + h];
                        col[i] = a + b;
                        col[i + h] = a - b;
                    }
                }
                h *= 2;
            }
            col.iter_mut().for_each(|v| *v *= norm);
        });
        self.hadamard_frame = !self.hadamard_frame;
    }

    fn set_frame(&mut self, hadamard: bool) {
        if self.hadamard_frame != hadamard {
            self.toggle_frame();
        }
    }

    fn single(&mut self, q: usize, g: Mat2, conjugated: Mat2) {
        if self.hadamard_frame {
            self.apply_1q(q, conjugated);
        } else {
            self.apply_1q(q, g);
        }
    }

    /// Multiplies by `diag(phase)` in the Hadamard frame.
    fn apply_x_diagonal(&mut self, phase: &[f64]) {
        self.set_frame(true);
        let dim = self.dim();
        let diag: Vec<Complex64> = phase.iter().map(|&p| Complex64::from_polar(1.0, -p)).collect();
        self.u.as_mut_slice().par_chunks_mut(dim).for_each(|col| {
            col.iter_mut().zip(&diag).for_each(|(v, d)| *v *= d);
        });
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.n)?;
        match gate {
            Gate::Rx { qubit, angle } => self.single(*qubit, rx(*angle), rz(*angle)),
            Gate::Ry { qubit, angle } => self.single(*qubit, ry(*angle), ry(-*angle)),
            Gate::Rz { qubit, angle } => self.single(*qubit, rz(*angle), rx(*angle)),
            Gate::H { qubit } => self.apply_1q(*qubit, hadamard()),
            Gate::Xx { a, b, angle } => {
                let mut j = CouplingMatrix::zeros(self.n);
                j.set(*a, *b, *angle);
                let phase = ising_phases(&j);
                self.apply_x_diagonal(&phase);
            }
            Gate::Ising { couplings } => {
                let j = CouplingMatrix::devectorize(couplings, self.n)?;
                let phase = ising_phases(&j);
                self.apply_x_diagonal(&phase);
            }
            Gate::Schedule { schedule, modes } => {
                let phase = schedule_phases(schedule, modes)?;
                self.apply_x_diagonal(&phase);
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Unitary {
        self.set_frame(false);
        self.u
    }
}

/// `sum_{i<j} J_ij z_i z_j` for every basis index, `z = 1 - 2 bit`.
fn ising_phases(j: &CouplingMatrix) -> Vec<f64> {
    let n = j.n();
    let terms: Vec<(usize, usize, f64)> = crate::coupling::pairs(n)
        .map(|(a, b)| (a, b, j.get(a, b)))
        .filter(|t| t.2 != 0.0)
        .collect();
    (0..1usize << n)
        .map(|x| {
            terms
                .iter()
                .map(|&(a, b, v)| {
                    let parity = ((x >> (n - 1 - a)) ^ (x >> (n - 1 - b))) & 1;
                    if parity == 0 {
                        v
                    } else {
                        -v
                    }
                })
                .sum()
        })
        .collect()
}

/// Phases of a schedule, block by block, each block sandwiched by `R_z(pi)`
/// on its flipped qubits.  In the Hadamard frame `R_z(pi) = -i X` is a bit
/// flip, so a sandwich contributes the sign-flipped couplings plus a global
/// `-1` per flipped qubit.
fn schedule_phases(schedule: &DriveSchedule, modes: &ModeData) -> Result<Vec<f64>> {
    let n = modes.n();
    let mut total = vec![0.0; 1 << n];
    for b in &schedule.blocks {
        let j = couplings_from_weights(modes, &b.absorbed_weights())?;
        let flipped = apply_flip(&j, &b.flips)?;
        let sign = std::f64::consts::PI * b.flips.len() as f64;
        for (t, p) in total.iter_mut().zip(ising_phases(&flipped)) {
            // exp(-i phase); (-1)^|F| = exp(-i pi |F|)
            *t += p + sign;
        }
    }
    Ok(total)
}

pub fn circuit_unitary(circuit: &Circuit) -> Result<Unitary> {
    let mut sim = Simulator::new(circuit.n)?;
    for g in &circuit.gates {
        sim.apply(g)?;
    }
    Ok(sim.finish())
}

/// `exp(-i sum_{i<j} J_ij X_i X_j)`.
pub fn ising_unitary(j: &CouplingMatrix) -> Result<Unitary> {
    let mut c = Circuit::new(j.n());
    c.push(Gate::ising(j));
    circuit_unitary(&c)
}

pub fn schedule_unitary(schedule: &DriveSchedule, modes: &ModeData) -> Result<Unitary> {
    let mut c = Circuit::new(modes.n());
    c.push(Gate::schedule(schedule.clone(), Arc::new(modes.clone())));
    circuit_unitary(&c)
}

/// `|tr(U^dagger V)| / dim`.
pub fn fidelity(u: &Unitary, v: &Unitary) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            actual: v.nrows(),
        });
    }
    let tr: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(tr.norm() / u.nrows() as f64)
}

/// `||U^dagger U - I||_max`.
pub fn unitarity_defect(u: &Unitary) -> f64 {
    let p = u.adjoint() * u;
    let id = Unitary::identity(u.nrows(), u.ncols());
    (p - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Explicit Kronecker products and a scaling-and-squaring exponential.
    use super::*;

    pub fn pauli(which: char) -> Unitary {
        let m: [Complex64; 4] = match which {
            'i' => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            'x' => [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            'y' => [c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
            'z' => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
            'h' => {
                let h = FRAC_1_SQRT_2;
                [c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]
            }
            _ => unreachable!(),
        };
        Unitary::from_row_slice(2, 2, &m)
    }

    /// Tensor product with factor 0 most significant.
    pub fn kron_all(factors: &[Unitary]) -> Unitary {
        factors
            .iter()
            .fold(Unitary::identity(1, 1), |acc, f| acc.kronecker(f))
    }

    /// Operator `p` on qubit `q`, identity elsewhere.
    pub fn on(n: usize, q: usize, p: &Unitary) -> Unitary {
        let f: Vec<Unitary> = (0..n).map(|i| if i == q { p.clone() } else { pauli('i') }).collect();
        kron_all(&f)
    }

    pub fn expm(a: &Unitary) -> Unitary {
        let norm = a.iter().map(|z| z.norm()).sum::<f64>();
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let scaled = a / c(2f64.powi(squarings), 0.0);
        let dim = a.nrows();
        let mut term = Unitary::identity(dim, dim);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &scaled / c(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    /// `exp(-i theta P)` for a Hermitian `P`.
    pub fn evolve(p: &Unitary, theta: f64) -> Unitary {
        expm(&(p * c(0.0, -theta)))
    }

    pub fn ising_hamiltonian(j: &CouplingMatrix) -> Unitary {
        let n = j.n();
        let dim = 1 << n;
        let mut h = Unitary::zeros(dim, dim);
        for (a, b) in crate::coupling::pairs(n) {
            h += on(n, a, &pauli('x')) * on(n, b, &pauli('x')) * c(j.get(a, b), 0.0);
        }
        h
    }
}
