//! Information-flow summaries for a small bytecode-like language.
//!
//! For every method the analysis computes a guard (a condition on the calling
//! context under which the call cannot leak high data to a public sink) and an
//! effect (upper bounds on the return level and on the heap after the call).
//! Summaries are computed bottom-up over the call graph by symbolic backward
//! reachability on a per-method transition system, and can be cross-checked
//! against a concrete interpreter with a paired-execution tester.

pub mod driver;
pub mod error;
pub mod heap;
pub mod infer;
pub mod interproc;
pub mod ir;
pub mod oracle;
pub mod scfg;
pub mod symlat;

pub use error::{Error, Result};
