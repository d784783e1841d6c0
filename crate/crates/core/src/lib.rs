pub mod coupling;
pub mod error;
pub mod harness;
pub mod nbody;
pub mod qft;
pub mod sim;
pub mod simplex;
pub mod synth;
pub mod targets;
pub mod trap;

pub use coupling::{CouplingMatrix, FlipPattern};
pub use error::{Error, Result};
pub use harness::{BenchRecord, Experiment};
pub use targets::{Exponent, Precision, TargetKind};
pub use trap::{ModeData, TrapConfig};
pub use synth::{BaselineModel, ColumnFamily, DriveBlock, DriveSchedule, FlipFamily, ModeFamily};
pub use sim::{Circuit, Gate, Unitary};
