//! Finite automata for LTLf formulas: compilation, monitoring, exact counting, and
//! uniform sampling of accepted strings.

mod count;
mod dfa;
mod letter;
mod monitor;
mod oracle;
mod progression;

pub use count::{count_accepted, sample_accepted, AcceptedSampler, CountResult, CountTable, SampleError};
pub use dfa::{
    compile, compile_with, CompileError, CompileOptions, Dfa, Guard, LetterClass, LetterSpace, StateId,
    DEFAULT_MAX_CLASSES, DEFAULT_MAX_STATES,
};
pub use letter::{Letter, LetterModel};
pub use monitor::{monitor_step, MonitorState, MonitorStatus};
pub use oracle::brute_force_accepts;
