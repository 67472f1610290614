//! Concrete ground truth: an interpreter and a paired-execution tester for
//! summary guards.

pub mod interp;
pub mod ni;

pub use interp::{execute, run_concrete, ConcreteState, End, Env, Heap, NativeKind, Natives, OutVal, Run, RunLimits, Trace, Val};
pub use ni::{check_noninterference, low_equivalent, LevelAssignment, NiConfig, Verdict, Witness};
