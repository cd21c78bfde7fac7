//! Shared inputs for the benchmarks.

use ergsq_core::sample::random_steps;
use ergsq_core::{GridSpec, Signal};

/// Random step signal on `2^log_len` unit cells.
pub fn bench_signal(log_len: u32, seed: u64) -> Signal {
    random_steps(GridSpec::real(0, 0, 1 << log_len).expect("valid grid"), seed).expect("valid signal")
}
