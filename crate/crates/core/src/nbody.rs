//! n-body `X...X` interactions from two uniform entangling blocks and a
//! single-qubit rotation on an anchor qubit.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::{pairs, CouplingMatrix};
use crate::error::{Error, Result};
use crate::sim::{Circuit, Gate, Unitary, MAX_QUBITS};
use crate::synth::{synthesize, synthesize_partial, ColumnFamily, DirectCost, DriveSchedule};
use crate::trap::ModeData;

/// Per-pair Ising angle of `U_MQ(theta)` is `theta * U_MQ_PAIR_ANGLE_FACTOR`.
pub const U_MQ_PAIR_ANGLE_FACTOR: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NBodySpec {
    pub n_total: usize,
    /// Participating qubits; the first one is the anchor.
    pub subset: Vec<usize>,
    pub j: f64,
    pub t: f64,
}

impl NBodySpec {
    pub fn new(n_total: usize, subset: Vec<usize>, jt: f64) -> Result<Self> {
        let spec = Self {
            n_total,
            subset,
            j: jt,
            t: 1.0,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        if self.subset.is_empty() {
            return Err(Error::InvalidParameter("n-body subset is empty".into()));
        }
        if let Some(&q) = self.subset.iter().find(|&&q| q >= self.n_total) {
            return Err(Error::IndexOutOfRange { index: q, n: self.n_total });
        }
        let mut sorted = self.subset.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.subset.len() {
            return Err(Error::InvalidParameter(format!("repeated qubit in subset {:?}", self.subset)));
        }
        Ok(())
    }

    pub fn anchor(&self) -> usize {
        self.subset[0]
    }

    pub fn m(&self) -> usize {
        self.subset.len()
    }

    pub fn jt(&self) -> f64 {
        self.j * self.t
    }

    fn require_pair(&self) -> Result<()> {
        self.check()?;
        if self.m() < 2 {
            return Err(Error::InvalidParameter("an n-body circuit needs at least two qubits".into()));
        }
        Ok(())
    }

    /// Uniform `value` on every pair inside the subset.
    pub fn uniform_couplings(&self, value: f64) -> CouplingMatrix {
        let mut j = CouplingMatrix::zeros(self.n_total);
        for (a, &p) in self.subset.iter().enumerate() {
            for &q in &self.subset[a + 1..] {
                j.set(p, q, value);
            }
        }
        j
    }

    /// Vectorized mask of every pair that touches the anchor, spectators
    /// included.
    pub fn anchor_mask(&self) -> Vec<bool> {
        let a = self.anchor();
        pairs(self.n_total).map(|(i, j)| i == a || j == a).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OuterAxis {
    Y,
    Z,
}

/// Outer rotation axis and central rotation sign for an `m`-body term:
/// `R_y` for odd `m`, `R_z` for even; positive angle for `m = 4k+2, 4k+3`.
pub fn rotation_rule(m: usize) -> (OuterAxis, f64) {
    let axis = if m % 2 == 1 { OuterAxis::Y } else { OuterAxis::Z };
    let sign = if matches!(m % 4, 2 | 3) { 1.0 } else { -1.0 };
    (axis, sign)
}

fn outer(axis: OuterAxis, qubit: usize, angle: f64) -> Gate {
    match axis {
        OuterAxis::Y => Gate::Ry { qubit, angle },
        OuterAxis::Z => Gate::Rz { qubit, angle },
    }
}

/// Circuit with explicit outer axis and central sign, for rule checks.
pub fn nbody_circuit_with(spec: &NBodySpec, umq_plus: Gate, umq_minus: Gate, axis: OuterAxis, sign: f64) -> Result<Circuit> {
    spec.require_pair()?;
    let a = spec.anchor();
    let mut c = Circuit::new(spec.n_total);
    c.push(outer(axis, a, FRAC_PI_2))
        .push(umq_plus)
        .push(Gate::Rz {
            qubit: a,
            angle: sign * 2.0 * spec.jt(),
        })
        .push(umq_minus)
        .push(outer(axis, a, -FRAC_PI_2));
    Ok(c)
}

/// The n-body circuit with exact `U_MQ(+-pi/2)` Ising blocks whose per-pair
/// angle is `pi/2 * pair_angle_factor`.
pub fn nbody_circuit(spec: &NBodySpec, pair_angle_factor: f64) -> Result<Circuit> {
    spec.require_pair()?;
    let chi = FRAC_PI_2 * pair_angle_factor;
    let plus = Gate::ising(&spec.uniform_couplings(chi));
    let minus = Gate::ising(&spec.uniform_couplings(-chi));
    let (axis, sign) = rotation_rule(spec.m());
    nbody_circuit_with(spec, plus, minus, axis, sign)
}

/// The n-body circuit with `U_MQ(pi/2)` played as `schedule` and
/// `U_MQ(-pi/2)` as its negation.
pub fn nbody_circuit_from_schedule(spec: &NBodySpec, schedule: &DriveSchedule, modes: Arc<ModeData>) -> Result<Circuit> {
    spec.require_pair()?;
    let plus = Gate::schedule(schedule.clone(), modes.clone());
    let minus = Gate::schedule(schedule.negated(), modes);
    let (axis, sign) = rotation_rule(spec.m());
    nbody_circuit_with(spec, plus, minus, axis, sign)
}

/// `exp(-i J t prod_{q in S} X_q)`.
pub fn nbody_target_unitary(spec: &NBodySpec) -> Result<Unitary> {
    spec.check()?;
    let n = spec.n_total;
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits { n, limit: MAX_QUBITS });
    }
    let dim = 1usize << n;
    let flip = spec.subset.iter().fold(0usize, |acc, &q| acc | 1 << (n - 1 - q));
    let (s, co) = spec.jt().sin_cos();
    let mut u = Unitary::zeros(dim, dim);
    for x in 0..dim {
        u[(x, x)] += Complex64::new(co, 0.0);
        u[(x ^ flip, x)] += Complex64::new(0.0, -s);
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UmqMode {
    /// Uniform couplings on the subset, zero elsewhere.
    Naive,
    /// Only couplings touching the anchor are constrained.
    Optimized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UmqSynthesis {
    /// Realizes `U_MQ(pi/2)`.
    pub schedule: DriveSchedule,
    /// Runtime of one `U_MQ` block.
    pub runtime: f64,
}

pub fn umq_runtime(spec: &NBodySpec, mode: UmqMode, modes: &ModeData, family: ColumnFamily) -> Result<UmqSynthesis> {
    spec.require_pair()?;
    if modes.n() != spec.n_total {
        return Err(Error::DimensionMismatch {
            expected: spec.n_total,
            actual: modes.n(),
        });
    }
    let target = spec.uniform_couplings(FRAC_PI_2 * U_MQ_PAIR_ANGLE_FACTOR);
    let schedule = match mode {
        UmqMode::Naive => synthesize(&target, modes, family)?,
        UmqMode::Optimized => synthesize_partial(&target, &spec.anchor_mask(), modes, family)?,
    };
    Ok(UmqSynthesis {
        runtime: schedule.total_runtime,
        schedule,
    })
}

/// Two CNOT ladders of `m - 1` gates each, one time unit per gate.
pub fn nbody_direct_runtime(spec: &NBodySpec) -> Result<DirectCost> {
    spec.require_pair()?;
    let gate_count = 2 * (spec.m() - 1);
    Ok(DirectCost {
        runtime: gate_count as f64,
        gate_count,
    })
}
