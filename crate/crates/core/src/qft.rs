//! Quantum Fourier transform as `n - 1` Ising layers plus single-qubit
//! rotations, and truncation of the synthesized drive coefficients.
//!
//! Every controlled phase `R_k` between control `c` and target `j = c + d`
//! (`k = d + 1`) becomes `XX(pi/2^(k+1))` sandwiched by `Y(-+pi/2)` on the
//! control and `H` on the target, with `X(-pi/2^k)` on the control and
//! `X(pi/2^k)` on the target.  All `XX` terms of one control commute, so
//! they merge into one Ising layer; the target Hadamards cancel between
//! layers except for one column at the start.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::sim::{Circuit, Gate, Unitary, MAX_QUBITS};
use crate::synth::{realized_couplings, synthesize, ColumnFamily, DriveSchedule};
use crate::targets::{qft_layer_couplings, Precision};
use crate::trap::ModeData;

/// `R_k = diag(1, 1, 1, exp(2 pi i / 2^k))` on (control 0, target 1).
pub fn controlled_rk_decomposition(k: u32) -> Result<Circuit> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("controlled R_k needs k >= 2, got {k}")));
    }
    let x = PI / 2f64.powi(k as i32);
    let mut c = Circuit::new(2);
    c.push(Gate::Ry { qubit: 0, angle: -FRAC_PI_2 })
        .push(Gate::H { qubit: 1 })
        .push(Gate::Xx { a: 0, b: 1, angle: x / 2.0 })
        .push(Gate::Rx { qubit: 0, angle: -x })
        .push(Gate::Rx { qubit: 1, angle: x })
        .push(Gate::Ry { qubit: 0, angle: FRAC_PI_2 })
        .push(Gate::H { qubit: 1 });
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QftLayer {
    pub control: usize,
    #[serde(serialize_with = "serialize_upper")]
    pub couplings: CouplingMatrix,
    /// Accumulated `X` rotation on the control.
    pub control_correction: f64,
    /// `(target, X angle)` for each coupled target.
    pub target_corrections: Vec<(usize, f64)>,
}

fn serialize_upper<S: serde::Serializer>(j: &CouplingMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    j.vectorize().serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QftPlan {
    pub n: usize,
    pub precision: Precision,
    pub layers: Vec<QftLayer>,
}

pub fn qft_plan(n: usize, precision: Precision) -> Result<QftPlan> {
    if n == 0 {
        return Err(Error::InvalidParameter("QFT needs at least one qubit".into()));
    }
    let mut layers = Vec::with_capacity(n - 1);
    for c in 0..n - 1 {
        let couplings = qft_layer_couplings(n, c, precision)?;
        let target_corrections: Vec<(usize, f64)> = ((c + 1)..n)
            .filter(|&j| precision.keeps(j - c))
            .map(|j| (j, PI / 2f64.powi((j - c + 1) as i32)))
            .collect();
        let control_correction = -target_corrections.iter().map(|t| t.1).sum::<f64>();
        layers.push(QftLayer {
            control: c,
            couplings,
            control_correction,
            target_corrections,
        });
    }
    Ok(QftPlan { n, precision, layers })
}

impl QftPlan {
    /// The plan with each layer's entangling block supplied by `block`.
    fn circuit_with(&self, mut block: impl FnMut(usize, &QftLayer) -> Gate) -> Circuit {
        let mut circ = Circuit::new(self.n);
        for q in 0..self.n {
            circ.push(Gate::H { qubit: q });
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.target_corrections.is_empty() {
                continue;
            }
            let c = layer.control;
            circ.push(Gate::Ry { qubit: c, angle: -FRAC_PI_2 });
            circ.push(block(i, layer));
            circ.push(Gate::Rx {
                qubit: c,
                angle: layer.control_correction,
            });
            for &(j, angle) in &layer.target_corrections {
                circ.push(Gate::Rx { qubit: j, angle });
            }
            circ.push(Gate::Ry { qubit: c, angle: FRAC_PI_2 });
        }
        circ
    }

    /// Circuit with exact Ising layers.
    pub fn circuit(&self) -> Circuit {
        self.circuit_with(|_, layer| Gate::ising(&layer.couplings))
    }

    /// Circuit with each Ising layer played as the matching schedule.
    pub fn circuit_from_schedules(&self, schedules: &[DriveSchedule], modes: Arc<ModeData>) -> Result<Circuit> {
        if schedules.len() != self.layers.len() {
            return Err(Error::DimensionMismatch {
                expected: self.layers.len(),
                actual: schedules.len(),
            });
        }
        Ok(self.circuit_with(|i, _| Gate::schedule(schedules[i].clone(), modes.clone())))
    }

    pub fn synthesize(&self, modes: &ModeData, family: ColumnFamily) -> Result<Vec<DriveSchedule>> {
        self.layers
            .iter()
            .map(|l| synthesize(&l.couplings, modes, family))
            .collect()
    }

    pub fn layer_targets(&self) -> Vec<CouplingMatrix> {
        self.layers.iter().map(|l| l.couplings.clone()).collect()
    }
}

/// Discrete Fourier transform followed by bit reversal, i.e. the textbook
/// circuit without its final swaps.
pub fn qft_reference(n: usize) -> Result<Unitary> {
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits { n, limit: MAX_QUBITS });
    }
    let dim = 1usize << n;
    let norm = (dim as f64).sqrt().recip();
    let reverse = |x: usize| (0..n).fold(0, |acc, b| acc | ((x >> b) & 1) << (n - 1 - b));
    let mut u = Unitary::zeros(dim, dim);
    for k in 0..dim {
        for j in 0..dim {
            let phase = 2.0 * PI * ((j * k) % dim) as f64 / dim as f64;
            u[(reverse(k), j)] = Complex64::from_polar(norm, phase);
        }
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QftMethod {
    Direct,
    Multimode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QftCost {
    pub runtime: f64,
    pub entangling_count: usize,
}

/// Number of controlled rotations kept at precision `b`.
pub fn direct_gate_count(n: usize, precision: Precision) -> usize {
    (0..n)
        .map(|c| {
            let later = n - 1 - c;
            match precision {
                Precision::Unlimited => later,
                Precision::Bits(b) => later.min(b.saturating_sub(1)),
            }
        })
        .sum()
}

pub fn qft_runtime(
    n: usize,
    precision: Precision,
    method: QftMethod,
    modes: &ModeData,
    family: ColumnFamily,
) -> Result<QftCost> {
    match method {
        QftMethod::Direct => {
            let count = direct_gate_count(n, precision);
            Ok(QftCost {
                runtime: count as f64,
                entangling_count: count,
            })
        }
        QftMethod::Multimode => {
            let plan = qft_plan(n, precision)?;
            if modes.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: modes.n(),
                });
            }
            let runtime = plan
                .synthesize(modes, family)?
                .iter()
                .map(|s| s.total_runtime)
                .sum();
            Ok(QftCost {
                runtime,
                entangling_count: plan.layers.len(),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    Absolute,
    /// Threshold relative to the largest `|c~|` of each block.
    #[default]
    Relative,
}

/// Zeroes every duration-absorbed weight `|c~| < threshold` (scaled by the
/// block maximum in relative mode) and recomputes durations, runtime and
/// the residual against `target`.
pub fn truncate_schedule(
    schedule: &DriveSchedule,
    threshold: f64,
    mode: TruncationMode,
    target: &CouplingMatrix,
    modes: &ModeData,
) -> Result<DriveSchedule> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be non-negative, got {threshold}")));
    }
    let blocks = schedule.blocks.iter().map(|b| {
        let absorbed = b.absorbed_weights();
        let cut = match mode {
            TruncationMode::Absolute => threshold,
            TruncationMode::Relative => threshold * absorbed.iter().fold(0.0_f64, |m, c| m.max(c.abs())),
        };
        let kept = absorbed.iter().map(|&c| if c.abs() < cut { 0.0 } else { c }).collect();
        (b.flips.clone(), kept)
    });
    let mut out = DriveSchedule::from_absorbed(modes, blocks);
    out.residual = realized_couplings(&out, modes)?.max_abs_diff(target);
    Ok(out)
}

/// Every duration-absorbed weight slot of `schedule`: one per mode for
/// each pattern of `family`, zero where the pattern has no block.
pub fn coefficient_slots(schedule: &DriveSchedule, family: ColumnFamily) -> Result<Vec<f64>> {
    let patterns = family.patterns(schedule.n)?;
    let mut slots = Vec::with_capacity(patterns.len() * schedule.n);
    for p in &patterns {
        match schedule.blocks.iter().find(|b| &b.flips == p) {
            Some(b) => slots.extend(b.absorbed_weights()),
            None => slots.extend(std::iter::repeat(0.0).take(schedule.n)),
        }
    }
    Ok(slots)
}
