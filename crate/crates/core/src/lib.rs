//! Exchange-only control of encoded qubits in an ABAB Heisenberg spin chain.
//!
//! Each logical qubit is a pair of spins with different Zeeman energies, and
//! the only control is a non-negative exchange coupling `J(t)`. This crate
//! compiles single-qubit gates, SWAP and the two-qubit nNOR gate into
//! piecewise-constant `J` schedules and verifies every result by exact
//! propagation, on one pair or on a whole chain.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod compiler;
pub mod error;
pub mod io;
pub mod linalg;
pub mod nnor;
pub mod optimize;
pub mod propagator;
pub mod spin;

pub use chain::{
    chain_unitary, logical_block, logical_extract, magnetization_spectrum, propagate_chain, ChainSchedule,
    ChainSegment, ChainState, LogicalBlock,
};
pub use compiler::{
    compile_gate, compile_rotation_y, compile_rotation_z, compile_swap, euler_decompose, frame_sync_pad,
    CompileOptions, Compiled, EulerAngles, FidelityReport, GateKind, GateSpec,
};
pub use error::{Error, Result};
pub use io::{ScheduleFile, CSV_HEADER};
pub use linalg::{fidelity_up_to_phase, AxisAngle, ComplexMatrix};
pub use nnor::{nnor_target, search_nnor, verify_nnor_semantics, NnorOutcome, NnorTarget, SearchConfig};
pub use propagator::{
    propagate_constant, propagate_schedule, propagate_waveform, Pulse, PulseShape, Schedule, Subspace,
};
pub use spin::{ChainParams, PairParams};

pub use num_complex::Complex64;
