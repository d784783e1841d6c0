//! Seeded benchmark sweeps reproducing the runtime experiments, emitted as
//! flat CSV records.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nbody::{nbody_circuit_from_schedule, nbody_direct_runtime, nbody_target_unitary, umq_runtime, NBodySpec, UmqMode};
use crate::qft::{coefficient_slots, qft_plan, qft_reference, truncate_schedule, QftMethod, TruncationMode};
use crate::sim::{circuit_unitary, fidelity, ising_unitary, schedule_unitary};
use crate::synth::{direct_baseline, synthesize, BaselineModel, ColumnFamily, FlipFamily, ModeFamily};
use crate::targets::{make_target, Exponent, Precision, TargetKind};
use crate::trap::{transverse_modes, ModeData, TrapConfig};
use crate::CouplingMatrix;

/// Instances per point for random ensembles unless overridden.
pub const DEFAULT_INSTANCES: usize = 50;

pub const DEFAULT_SEED: u64 = 1234;

/// Largest chain for the arbitrary-flip comparison.
pub const ARBITRARY_SIZE_LIMIT: usize = 12;

/// Points at or below this size are checked end to end on the simulator.
pub const VERIFY_LIMIT: usize = 10;

pub const VERIFY_FIDELITY: f64 = 1.0 - 1e-8;

/// Power-law exponents for the `fig3c` sweep, from all-to-all to
/// nearest-neighbour.
pub const ALPHA_GRID: [f64; 10] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, f64::INFINITY];

/// Relative truncation thresholds for `fig10d`.
pub const THRESHOLD_GRID: [f64; 8] = [0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1];

/// Soft wall-clock budget for a single all-to-all point.
const POINT_BUDGET_SECS: f64 = 60.0;

pub const CSV_HEADER: &str = "experiment,n,parameter,method,runtime_mean,runtime_std,instances,base_seed";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    /// All-to-all couplings.
    Fig3a,
    /// Nearest-neighbour couplings.
    Fig3b,
    /// Power-law decay over [`ALPHA_GRID`].
    Fig3c,
    /// Edwards-Anderson glass.
    Fig4a,
    /// Sherrington-Kirkpatrick glass.
    Fig4b,
    /// Uniform random couplings.
    Fig4c,
    /// Paired flips with and without multi-mode drives.
    Fig5a,
    /// Arbitrary flips with and without multi-mode drives.
    Fig5b,
    /// n-body gates on a fixed chain, swept over subset size.
    Fig7,
    /// Full QFT.
    Fig10a,
    /// Approximate QFT, swept over precision.
    Fig10b,
    /// Truncated QFT schedules, swept over relative threshold.
    Fig10d,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Self::Fig3a,
        Self::Fig3b,
        Self::Fig3c,
        Self::Fig4a,
        Self::Fig4b,
        Self::Fig4c,
        Self::Fig5a,
        Self::Fig5b,
        Self::Fig7,
        Self::Fig10a,
        Self::Fig10b,
        Self::Fig10d,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Self::Fig3a => "fig3a",
            Self::Fig3b => "fig3b",
            Self::Fig3c => "fig3c",
            Self::Fig4a => "fig4a",
            Self::Fig4b => "fig4b",
            Self::Fig4c => "fig4c",
            Self::Fig5a => "fig5a",
            Self::Fig5b => "fig5b",
            Self::Fig7 => "fig7",
            Self::Fig10a => "fig10a",
            Self::Fig10b => "fig10b",
            Self::Fig10d => "fig10d",
        }
    }

    /// Whether points average over seeded random targets.
    pub fn is_ensemble(self) -> bool {
        matches!(self, Self::Fig4a | Self::Fig4b | Self::Fig4c | Self::Fig5a | Self::Fig5b)
    }

    pub fn default_grid(self) -> Vec<usize> {
        match self {
            Self::Fig3a | Self::Fig3b => (4..=40).step_by(4).collect(),
            Self::Fig3c => vec![20, 30, 40],
            Self::Fig4a | Self::Fig4b | Self::Fig4c => (4..=16).step_by(2).collect(),
            Self::Fig5a => (4..=12).step_by(2).collect(),
            Self::Fig5b => (4..=10).step_by(2).collect(),
            Self::Fig7 | Self::Fig10b | Self::Fig10d => vec![12],
            Self::Fig10a => (4..=24).step_by(4).collect(),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.tag() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub experiment: String,
    pub n: usize,
    /// Power-law exponent, precision, threshold or subset size.
    pub parameter: f64,
    pub method: String,
    pub runtime_mean: f64,
    pub runtime_std: f64,
    pub instances: usize,
    pub base_seed: u64,
}

/// Parses `start:stop:step` (inclusive) or a comma list.
pub fn parse_grid(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("bad grid `{s}`"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let grid: Vec<usize> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let (start, stop, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err(bad()),
        };
        if step == 0 || stop < start {
            return Err(bad());
        }
        (start..=stop).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

fn modes_for(n: usize) -> Result<ModeData> {
    transverse_modes(&TrapConfig::new(n)?)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

fn require(fid: f64) -> Result<()> {
    if fid >= VERIFY_FIDELITY {
        Ok(())
    } else {
        Err(Error::VerificationFailed {
            fidelity: fid,
            required: VERIFY_FIDELITY,
        })
    }
}

/// One sampled schedule played on the simulator against the exact evolution.
fn verify_ising(target: &CouplingMatrix, schedule: &crate::DriveSchedule, modes: &ModeData) -> Result<()> {
    require(fidelity(&schedule_unitary(schedule, modes)?, &ising_unitary(target)?)?)
}

struct Point {
    n: usize,
    parameter: f64,
    kind: TargetKind,
    /// `(method, family)`; the direct baseline is added separately.
    methods: Vec<(&'static str, ColumnFamily)>,
    direct: bool,
}

const MULTI: ColumnFamily = ColumnFamily::new(FlipFamily::TemplateSingle, ModeFamily::Multi);

fn ising_points(exp: Experiment, grid: &[usize]) -> Result<Vec<Point>> {
    let mut points = Vec::new();
    for &n in grid {
        let simple = |kind, parameter| Point {
            n,
            parameter,
            kind,
            methods: vec![("multimode", MULTI)],
            direct: true,
        };
        match exp {
            Experiment::Fig3a => points.push(simple(TargetKind::AllToAll, 0.0)),
            Experiment::Fig3b => points.push(simple(TargetKind::NearestNeighbor, f64::INFINITY)),
            Experiment::Fig3c => {
                for alpha in ALPHA_GRID {
                    let exponent = if alpha.is_finite() {
                        Exponent::Finite(alpha)
                    } else {
                        Exponent::Infinite
                    };
                    points.push(simple(TargetKind::PowerLaw { exponent, j0: 1.0 }, alpha));
                }
            }
            Experiment::Fig4a => points.push(simple(TargetKind::EaGlass, 0.0)),
            Experiment::Fig4b => points.push(simple(TargetKind::SkGlass, 0.0)),
            Experiment::Fig4c => points.push(simple(TargetKind::UniformRandom, 0.0)),
            Experiment::Fig5a | Experiment::Fig5b => {
                let wide = if exp == Experiment::Fig5a {
                    FlipFamily::Paired
                } else {
                    if n > ARBITRARY_SIZE_LIMIT {
                        return Err(Error::FamilyTooLarge {
                            n,
                            limit: ARBITRARY_SIZE_LIMIT,
                        });
                    }
                    FlipFamily::Arbitrary
                };
                let prefix = if wide == FlipFamily::Paired { "paired" } else { "arbitrary" };
                let com: &'static str = if prefix == "paired" { "paired_com" } else { "arbitrary_com" };
                let multi: &'static str = if prefix == "paired" { "paired_multi" } else { "arbitrary_multi" };
                points.push(Point {
                    n,
                    parameter: 0.0,
                    kind: TargetKind::UniformRandom,
                    methods: vec![
                        ("single_multi", MULTI),
                        (com, ColumnFamily::new(wide, ModeFamily::ComOnly)),
                        (multi, ColumnFamily::new(wide, ModeFamily::Multi)),
                    ],
                    direct: false,
                });
            }
            _ => unreachable!("not an Ising sweep"),
        }
    }
    Ok(points)
}

fn run_ising(exp: Experiment, grid: &[usize], instances: usize, base_seed: u64) -> Result<Vec<BenchRecord>> {
    let points = ising_points(exp, grid)?;
    let per_point: Vec<Vec<BenchRecord>> = points
        .par_iter()
        .map(|p| -> Result<Vec<BenchRecord>> {
            let start = Instant::now();
            let modes = modes_for(p.n)?;
            let count = if p.kind.is_random() { instances } else { 1 };
            // runtimes[i] = [direct?, method...] for instance i
            let runtimes: Vec<Vec<f64>> = (0..count)
                .into_par_iter()
                .map(|i| -> Result<Vec<f64>> {
                    let target = make_target(&p.kind, p.n, Some(base_seed + i as u64))?;
                    let mut row = Vec::with_capacity(p.methods.len() + 1);
                    if p.direct {
                        row.push(direct_baseline(&target, BaselineModel::FixedTau).runtime);
                    }
                    for (_, family) in &p.methods {
                        let schedule = synthesize(&target, &modes, *family)?;
                        if i == 0 && p.n <= VERIFY_LIMIT {
                            verify_ising(&target, &schedule, &modes)?;
                        }
                        row.push(schedule.total_runtime);
                    }
                    Ok(row)
                })
                .collect::<Result<_>>()?;

            let elapsed = start.elapsed().as_secs_f64();
            log::info!("{exp} n={} parameter={} done in {elapsed:.2}s", p.n, p.parameter);
            if exp == Experiment::Fig3a && elapsed > POINT_BUDGET_SECS {
                log::warn!("{exp} n={} took {elapsed:.1}s, over the {POINT_BUDGET_SECS}s budget", p.n);
            }

            let names = p.direct.then_some("direct").into_iter().chain(p.methods.iter().map(|m| m.0));
            Ok(names
                .enumerate()
                .map(|(col, method)| {
                    let values: Vec<f64> = runtimes.iter().map(|r| r[col]).collect();
                    let (runtime_mean, runtime_std) = mean_std(&values);
                    BenchRecord {
                        experiment: exp.tag().into(),
                        n: p.n,
                        parameter: p.parameter,
                        method: method.into(),
                        runtime_mean,
                        runtime_std,
                        instances: count,
                        base_seed,
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

fn single(exp: Experiment, n: usize, parameter: f64, method: &str, value: f64, base_seed: u64) -> BenchRecord {
    BenchRecord {
        experiment: exp.tag().into(),
        n,
        parameter,
        method: method.into(),
        runtime_mean: value,
        runtime_std: 0.0,
        instances: 1,
        base_seed,
    }
}

/// Subset `0..m` with anchor 0 on an `n_total` chain; the multimode cost
/// counts both `U_MQ` blocks.
fn run_nbody(grid: &[usize], base_seed: u64) -> Result<Vec<BenchRecord>> {
    let exp = Experiment::Fig7;
    let jobs: Vec<(usize, usize)> = grid.iter().flat_map(|&n| (2..=n).map(move |m| (n, m))).collect();
    let modes: BTreeMap<usize, Arc<ModeData>> = grid
        .iter()
        .map(|&n| Ok((n, Arc::new(modes_for(n)?))))
        .collect::<Result<_>>()?;
    let per_job: Vec<Vec<BenchRecord>> = jobs
        .par_iter()
        .map(|&(n, m)| -> Result<Vec<BenchRecord>> {
            let md = &modes[&n];
            let spec = NBodySpec::new(n, (0..m).collect(), std::f64::consts::FRAC_PI_4)?;
            let direct = nbody_direct_runtime(&spec)?.runtime;
            let naive = umq_runtime(&spec, UmqMode::Naive, md, MULTI)?;
            let optimized = umq_runtime(&spec, UmqMode::Optimized, md, MULTI)?;
            if n <= VERIFY_LIMIT {
                let circ = nbody_circuit_from_schedule(&spec, &optimized.schedule, md.clone())?;
                require(fidelity(&circuit_unitary(&circ)?, &nbody_target_unitary(&spec)?)?)?;
            }
            let p = m as f64;
            Ok(vec![
                single(exp, n, p, "direct", direct, base_seed),
                single(exp, n, p, "naive", 2.0 * naive.runtime, base_seed),
                single(exp, n, p, "optimized", 2.0 * optimized.runtime, base_seed),
            ])
        })
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

fn verify_qft(n: usize, precision: Precision, schedules: &[crate::DriveSchedule], modes: Arc<ModeData>) -> Result<()> {
    let plan = qft_plan(n, precision)?;
    let circ = plan.circuit_from_schedules(schedules, modes)?;
    let reference = if precision.keeps(n) {
        qft_reference(n)?
    } else {
        circuit_unitary(&plan.circuit())?
    };
    require(fidelity(&circuit_unitary(&circ)?, &reference)?)
}

fn run_qft(exp: Experiment, grid: &[usize], base_seed: u64) -> Result<Vec<BenchRecord>> {
    // fig10a runs at full precision, recorded as an infinite parameter
    let jobs: Vec<(usize, Precision)> = match exp {
        Experiment::Fig10a => grid.iter().map(|&n| (n, Precision::Unlimited)).collect(),
        _ => grid
            .iter()
            .flat_map(|&n| (1..=n).map(move |b| (n, Precision::Bits(b))))
            .collect(),
    };
    let per_job: Vec<Vec<BenchRecord>> = jobs
        .par_iter()
        .map(|&(n, precision)| -> Result<Vec<BenchRecord>> {
            let modes = Arc::new(modes_for(n)?);
            let plan = qft_plan(n, precision)?;
            let schedules = plan.synthesize(&modes, MULTI)?;
            if n <= VERIFY_LIMIT {
                verify_qft(n, precision, &schedules, modes.clone())?;
            }
            let direct = crate::qft::qft_runtime(n, precision, QftMethod::Direct, &modes, MULTI)?.runtime;
            let multimode = schedules.iter().map(|s| s.total_runtime).sum();
            let p = precision.as_f64();
            Ok(vec![
                single(exp, n, p, "direct", direct, base_seed),
                single(exp, n, p, "multimode", multimode, base_seed),
            ])
        })
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Result of truncating every layer of a full QFT at one threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPoint {
    pub threshold: f64,
    pub runtime: f64,
    pub infidelity: f64,
    /// Fraction of weight slots (see [`coefficient_slots`]) left at zero.
    pub removed_fraction: f64,
}

/// Full QFT with every layer truncated at `threshold`, simulated against
/// the reference.
pub fn truncated_qft(n: usize, threshold: f64, mode: TruncationMode) -> Result<TruncationPoint> {
    let modes = Arc::new(modes_for(n)?);
    let plan = qft_plan(n, Precision::Unlimited)?;
    let schedules = plan.synthesize(&modes, MULTI)?;
    truncated_qft_from(&plan, &schedules, modes, threshold, mode)
}

pub fn truncated_qft_from(
    plan: &crate::qft::QftPlan,
    schedules: &[crate::DriveSchedule],
    modes: Arc<ModeData>,
    threshold: f64,
    mode: TruncationMode,
) -> Result<TruncationPoint> {
    let truncated: Vec<_> = schedules
        .iter()
        .zip(plan.layer_targets())
        .map(|(s, t)| truncate_schedule(s, threshold, mode, &t, &modes))
        .collect::<Result<_>>()?;
    let mut slots = 0usize;
    let mut zeros = 0usize;
    for s in &truncated {
        let c = coefficient_slots(s, MULTI)?;
        slots += c.len();
        zeros += c.iter().filter(|v| **v == 0.0).count();
    }
    let circ = plan.circuit_from_schedules(&truncated, modes)?;
    let fid = fidelity(&circuit_unitary(&circ)?, &qft_reference(plan.n)?)?;
    Ok(TruncationPoint {
        threshold,
        runtime: truncated.iter().map(|s| s.total_runtime).sum(),
        infidelity: (1.0 - fid).max(0.0),
        removed_fraction: zeros as f64 / slots.max(1) as f64,
    })
}

/// `runtime_mean` carries the truncated runtime, the infidelity or the
/// removed fraction depending on `method`.
fn run_truncation(grid: &[usize], base_seed: u64) -> Result<Vec<BenchRecord>> {
    let exp = Experiment::Fig10d;
    let mut out = Vec::new();
    for &n in grid {
        let modes = Arc::new(modes_for(n)?);
        let plan = qft_plan(n, Precision::Unlimited)?;
        let schedules = plan.synthesize(&modes, MULTI)?;
        // one dense 2^n chain at a time; the simulator parallelizes internally
        for threshold in THRESHOLD_GRID {
            let pt = truncated_qft_from(&plan, &schedules, modes.clone(), threshold, TruncationMode::Relative)?;
            out.push(single(exp, n, threshold, "runtime", pt.runtime, base_seed));
            out.push(single(exp, n, threshold, "infidelity", pt.infidelity, base_seed));
            out.push(single(exp, n, threshold, "removed_fraction", pt.removed_fraction, base_seed));
        }
    }
    Ok(out)
}

/// Runs one experiment over `grid`. Ensemble instance `i` uses seed
/// `base_seed + i`; deterministic sweeps record a single instance.
pub fn run_experiment(exp: Experiment, grid: &[usize], instances: usize, base_seed: u64) -> Result<Vec<BenchRecord>> {
    if grid.is_empty() || grid.contains(&0) {
        return Err(Error::InvalidParameter("grid must hold positive sizes".into()));
    }
    if exp.is_ensemble() && instances == 0 {
        return Err(Error::InvalidParameter("need at least one instance".into()));
    }
    match exp {
        Experiment::Fig7 => run_nbody(grid, base_seed),
        Experiment::Fig10a | Experiment::Fig10b => run_qft(exp, grid, base_seed),
        Experiment::Fig10d => run_truncation(grid, base_seed),
        _ => run_ising(exp, grid, instances, base_seed),
    }
}

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub stderr: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(&x, &y)| (x.ln(), y.ln())).collect();
    if pts.len() < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 sizes to fit, got {}", pts.len())));
    }
    if pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidParameter("fit needs positive finite sizes and runtimes".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx < 1e-12 {
        return Err(Error::InvalidParameter("degenerate size grid".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    Ok(PowerFit {
        exponent: slope,
        stderr: (sse / (k - 2.0) / sxx).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub experiment: String,
    pub method: String,
    pub parameter: f64,
    pub sizes: usize,
    pub fit: PowerFit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Speedup {
    pub experiment: String,
    pub n: usize,
    pub parameter: f64,
    /// Direct runtime over multimode runtime.
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub fits: Vec<ScalingFit>,
    pub speedups: Vec<Speedup>,
}

/// Fits every `(experiment, method, parameter)` series that spans at
/// least four sizes, and tabulates direct/multimode ratios.
pub fn summarize(records: &[BenchRecord]) -> Result<Summary> {
    let key = |r: &BenchRecord| (r.experiment.clone(), r.method.clone(), r.parameter.to_bits());
    let mut series: BTreeMap<(String, String, u64), Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        series.entry(key(r)).or_default().push((r.n as f64, r.runtime_mean));
    }
    let mut summary = Summary::default();
    for ((experiment, method, p), pts) in &series {
        if pts.len() < 4 {
            continue;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        summary.fits.push(ScalingFit {
            experiment: experiment.clone(),
            method: method.clone(),
            parameter: f64::from_bits(*p),
            sizes: pts.len(),
            fit: fit_exponent(&xs, &ys)?,
        });
    }
    if summary.fits.is_empty() {
        return Err(Error::InvalidParameter("no series spans four sizes".into()));
    }
    for r in records.iter().filter(|r| r.method == "direct") {
        if let Some(m) = records
            .iter()
            .find(|o| o.method == "multimode" && o.experiment == r.experiment && o.n == r.n && o.parameter == r.parameter)
        {
            summary.speedups.push(Speedup {
                experiment: r.experiment.clone(),
                n: r.n,
                parameter: r.parameter,
                ratio: r.runtime_mean / m.runtime_mean,
            });
        }
    }
    Ok(summary)
}
