use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use multimode::harness::{parse_grid, run_experiment, summarize, write_csv, DEFAULT_INSTANCES, DEFAULT_SEED};
use multimode::nbody::{nbody_circuit_from_schedule, nbody_direct_runtime, nbody_target_unitary, umq_runtime};
use multimode::nbody::{NBodySpec, UmqMode};
use multimode::qft::{direct_gate_count, qft_plan, qft_reference, truncate_schedule, TruncationMode};
use multimode::sim::{circuit_unitary, fidelity, ising_unitary, schedule_unitary, MAX_QUBITS};
use multimode::synth::{direct_baseline, realized_couplings, synthesize};
use multimode::targets::make_target;
use multimode::trap::transverse_modes;
use multimode::{BaselineModel, ColumnFamily, CouplingMatrix, DriveSchedule, Experiment, Exponent, FlipFamily, ModeData};
use multimode::{ModeFamily, Precision, TargetKind, TrapConfig};

#[derive(Parser)]
#[command(name = "multimode", version, about = "Minimum-runtime multi-mode drive synthesis for trapped ions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transverse normal modes of an n-ion chain as JSON.
    Modes {
        #[arg(long)]
        n: usize,
        /// Transverse/axial anisotropy; defaults to a stable value for n.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Synthesize a minimum-runtime drive schedule for a coupling target.
    Synth {
        /// all_to_all, nearest_neighbor, power_law, ea_glass, sk_glass or uniform_random.
        #[arg(long)]
        target: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: Option<f64>,
        /// Seed for random targets.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Decay exponent for power_law targets (`inf` for nearest-neighbour).
        #[arg(long, default_value = "1")]
        exponent: String,
        #[arg(long, value_enum, default_value_t = Flips::Single)]
        flips: Flips,
        #[arg(long, value_enum, default_value_t = Modes::Multi)]
        modes: Modes,
        #[arg(long, value_enum, default_value_t = Baseline::Fixed)]
        baseline: Baseline,
        #[arg(long)]
        out: PathBuf,
        /// Also write the target as `{"n", "j_upper"}` JSON.
        #[arg(long)]
        target_out: Option<PathBuf>,
    },
    /// Check a schedule against a target: residual and simulated fidelity.
    Verify {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Residual tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Infidelity tolerance.
        #[arg(long, default_value_t = 1e-9)]
        fidelity_tol: f64,
    },
    /// exp(-i Jt prod sigma_x) on a qubit subset.
    Nbody {
        #[arg(long)]
        n: usize,
        /// Comma-separated qubits; the first is the anchor.
        #[arg(long, value_delimiter = ',')]
        subset: Vec<usize>,
        #[arg(long)]
        jt: f64,
        /// Constrain only the couplings that touch the anchor.
        #[arg(long)]
        optimized: bool,
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// QFT compiled to one Ising layer per control qubit.
    Qft {
        #[arg(long)]
        n: usize,
        /// Keep couplings with |i - j| < precision.
        #[arg(long)]
        precision: Option<usize>,
        /// Zero duration-absorbed weights below this threshold.
        #[arg(long)]
        truncate: Option<f64>,
        #[arg(long, value_enum, default_value_t = Truncate::Rel)]
        truncate_mode: Truncate,
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded benchmark sweep written as CSV.
    Bench {
        #[arg(long)]
        experiment: String,
        /// `start:stop:step` or a comma list; defaults per experiment.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = DEFAULT_INSTANCES)]
        instances: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Flips {
    Single,
    Pairs,
    Arbitrary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Modes {
    Multi,
    Com,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Fixed,
    Angle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Truncate {
    Abs,
    Rel,
}

fn family(flips: Flips, modes: Modes) -> ColumnFamily {
    let flips = match flips {
        Flips::Single => FlipFamily::TemplateSingle,
        Flips::Pairs => FlipFamily::Paired,
        Flips::Arbitrary => FlipFamily::Arbitrary,
    };
    let modes = match modes {
        Modes::Multi => ModeFamily::Multi,
        Modes::Com => ModeFamily::ComOnly,
    };
    ColumnFamily::new(flips, modes)
}

fn chain(n: usize, alpha: Option<f64>) -> Result<ModeData> {
    let config = match alpha {
        Some(a) => TrapConfig::with_anisotropy(n, a)?,
        None => TrapConfig::new(n)?,
    };
    Ok(transverse_modes(&config)?)
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn target_json(j: &CouplingMatrix) -> Value {
    json!({ "n": j.n(), "j_upper": j.vectorize() })
}

fn read_target(path: &Path) -> Result<CouplingMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text)?;
    let n = v["n"].as_u64().context("target JSON needs an integer `n`")? as usize;
    let upper: Vec<f64> = serde_json::from_value(v["j_upper"].clone()).context("target JSON needs `j_upper`")?;
    let j = CouplingMatrix::from_upper(&upper)?;
    ensure!(j.n() == n, "`j_upper` has {} entries, which does not match n = {n}", upper.len());
    Ok(j)
}

fn parse_kind(name: &str, exponent: &str) -> Result<TargetKind> {
    let kind: TargetKind = name.parse()?;
    Ok(match kind {
        TargetKind::PowerLaw { j0, .. } => {
            let exponent = match exponent {
                "inf" | "infinity" => Exponent::Infinite,
                s => Exponent::Finite(s.parse().with_context(|| format!("bad exponent `{s}`"))?),
            };
            TargetKind::PowerLaw { exponent, j0 }
        }
        TargetKind::NBody { .. } | TargetKind::QftLayer { .. } => {
            bail!("`{name}` targets are built by the nbody and qft subcommands")
        }
        k => k,
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Modes { n, alpha } => println!("{}", chain(n, alpha)?.to_json()?),

        Command::Synth {
            target,
            n,
            alpha,
            seed,
            exponent,
            flips,
            modes,
            baseline,
            out,
            target_out,
        } => {
            let kind = parse_kind(&target, &exponent)?;
            let md = chain(n, alpha)?;
            let j = make_target(&kind, n, Some(seed))?;
            let schedule = synthesize(&j, &md, family(flips, modes))?;
            fs::write(&out, schedule.to_json()? + "\n").with_context(|| format!("writing {}", out.display()))?;
            if let Some(p) = target_out {
                emit(&target_json(&j), Some(&p))?;
            }
            let model = match baseline {
                Baseline::Fixed => BaselineModel::FixedTau,
                Baseline::Angle => BaselineModel::AngleProportional,
            };
            let direct = direct_baseline(&j, model);
            println!(
                "{kind} n={n}: multimode runtime {:.9}, direct runtime {:.9} ({} gates), {} blocks, residual {:.2e}",
                schedule.total_runtime,
                direct.runtime,
                direct.gate_count,
                schedule.blocks.len(),
                schedule.residual
            );
        }

        Command::Verify {
            schedule,
            target,
            tol,
            fidelity_tol,
        } => {
            let text = fs::read_to_string(&schedule).with_context(|| format!("reading {}", schedule.display()))?;
            let s = DriveSchedule::from_json(&text)?;
            let j = read_target(&target)?;
            ensure!(j.n() == s.n, "schedule is for {} qubits, target for {}", s.n, j.n());
            let md = chain(s.n, Some(s.anisotropy))?;
            let residual = realized_couplings(&s, &md)?.max_abs_diff(&j);
            let mut pass = residual <= tol;
            println!("residual {residual:.3e} (tol {tol:.1e})");
            if s.n <= MAX_QUBITS {
                let f = fidelity(&schedule_unitary(&s, &md)?, &ising_unitary(&j)?)?;
                pass &= 1.0 - f <= fidelity_tol;
                println!("fidelity {f:.15} (infidelity tol {fidelity_tol:.1e})");
            } else {
                println!("fidelity skipped: {} qubits exceeds the simulator limit of {MAX_QUBITS}", s.n);
            }
            println!("{}", if pass { "PASS" } else { "FAIL" });
            if !pass {
                std::process::exit(1);
            }
        }

        Command::Nbody {
            n,
            subset,
            jt,
            optimized,
            verify,
            out,
        } => {
            let spec = NBodySpec::new(n, subset, jt)?;
            let md = Arc::new(chain(n, None)?);
            let mode = if optimized { UmqMode::Optimized } else { UmqMode::Naive };
            let umq = umq_runtime(&spec, mode, &md, ColumnFamily::default())?;
            let circuit = nbody_circuit_from_schedule(&spec, &umq.schedule, md)?;
            let fid = if verify {
                Some(fidelity(&circuit_unitary(&circuit)?, &nbody_target_unitary(&spec)?)?)
            } else {
                None
            };
            emit(
                &json!({
                    "spec": spec,
                    "mode": mode,
                    "circuit": circuit,
                    "umq_schedule": umq.schedule,
                    "umq_runtime": umq.runtime,
                    "multimode_runtime": 2.0 * umq.runtime,
                    "direct_runtime": nbody_direct_runtime(&spec)?.runtime,
                    "fidelity": fid,
                }),
                out.as_deref(),
            )?;
        }

        Command::Qft {
            n,
            precision,
            truncate,
            truncate_mode,
            verify,
            out,
        } => {
            let precision = precision.map_or(Precision::Unlimited, Precision::Bits);
            let md = Arc::new(chain(n, None)?);
            let plan = qft_plan(n, precision)?;
            let mut schedules = plan.synthesize(&md, ColumnFamily::default())?;
            if let Some(threshold) = truncate {
                let mode = match truncate_mode {
                    Truncate::Abs => TruncationMode::Absolute,
                    Truncate::Rel => TruncationMode::Relative,
                };
                schedules = schedules
                    .iter()
                    .zip(plan.layer_targets())
                    .map(|(s, t)| truncate_schedule(s, threshold, mode, &t, &md))
                    .collect::<multimode::Result<_>>()?;
            }
            let fid = if verify {
                let circuit = plan.circuit_from_schedules(&schedules, md.clone())?;
                let reference = if precision.keeps(n) {
                    qft_reference(n)?
                } else {
                    circuit_unitary(&plan.circuit())?
                };
                Some(fidelity(&circuit_unitary(&circuit)?, &reference)?)
            } else {
                None
            };
            let runtime: f64 = schedules.iter().map(|s| s.total_runtime).sum();
            emit(
                &json!({
                    "plan": plan,
                    "schedules": schedules,
                    "multimode_runtime": runtime,
                    "direct_runtime": direct_gate_count(n, precision) as f64,
                    "entangling_layers": plan.layers.iter().filter(|l| !l.target_corrections.is_empty()).count(),
                    "fidelity": fid,
                }),
                out.as_deref(),
            )?;
        }

        Command::Bench {
            experiment,
            grid,
            instances,
            seed,
            out,
        } => {
            let exp: Experiment = experiment.parse()?;
            let grid = match grid {
                Some(g) => parse_grid(&g)?,
                None => exp.default_grid(),
            };
            let records = run_experiment(exp, &grid, instances, seed)?;
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_csv(&records, file)?;
            eprintln!("{} records written to {}", records.len(), out.display());
            if let Ok(summary) = summarize(&records) {
                for f in &summary.fits {
                    eprintln!(
                        "{} {} parameter={}: exponent {:.3} +- {:.3} over {} sizes",
                        f.experiment, f.method, f.parameter, f.fit.exponent, f.fit.stderr, f.sizes
                    );
                }
            }
        }
    }
    Ok(())
}
